#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>

#include "rampinn/error.hpp"
#include "rampinn/model.hpp"
#include "rampinn/nn/checkpoint.hpp"

using namespace rampinn;
using nn::Shape;
using nn::Tensor;

namespace {

RamPinnConfig tiny_config(std::size_t length = 64) {
    RamPinnConfig c;
    c.input_length = length;
    c.width_multiplier = 0.0625;
    c.batch_size = 4;
    c.seed = 7;
    return c;
}

TrainSet synthetic_set(std::size_t n, std::size_t length, std::uint64_t seed, bool labels = true) {
    GenConfig g;
    g.seed = seed;
    g.n_samples = n;
    g.grid_length = length;
    g.max_peaks = 5;
    g.width_min = 0.01;
    g.width_max = 0.05;
    TrainSet t;
    for (const auto& s : generate_dataset(g)) {
        t.cars.emplace_back(s.triple.cars.values().begin(), s.triple.cars.values().end());
        if (labels) {
            t.raman.emplace_back(s.triple.raman.values().begin(), s.triple.raman.values().end());
        } else {
            t.raman.emplace_back();
        }
        t.labeled.push_back(labels ? 1 : 0);
    }
    return t;
}

template <class T>
Tensor<T> input_of(const TrainSet& d, std::size_t length) {
    std::vector<T> x;
    for (const auto& row : d.cars) x.insert(x.end(), row.begin(), row.end());
    return Tensor<T>::constant(Shape{d.size(), 1, length}, std::move(x));
}

template <class T>
std::vector<T> flat(const std::vector<std::vector<float>>& rows) {
    std::vector<T> v;
    for (const auto& r : rows) v.insert(v.end(), r.begin(), r.end());
    return v;
}

}  // namespace

TEST_CASE("default parameter count is close to 6.8M") {
    RamPinnNet<float> net(RamPinnConfig{});
    const auto n = net.parameter_count();
    MESSAGE("parameters: " << n);
    CHECK(n >= 6'460'000);
    CHECK(n <= 7'140'000);
}

TEST_CASE("width multiplier scales channels") {
    RamPinnConfig c;
    c.width_multiplier = 0.25;
    CHECK(c.scaled_encoder() == std::vector<std::size_t>{16, 32, 64, 128});
    CHECK(c.scaled_decoder() == std::vector<std::size_t>{64, 32, 16, 8});
    c.width_multiplier = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("forward produces sigmoid outputs of the input length") {
    auto cfg = tiny_config(100);  // not a multiple of 16
    RamPinnNet<float> net(cfg);
    const auto d = synthetic_set(3, 100, 1);
    const auto out = net.forward(input_of<float>(d, 100));
    CHECK(out.raman.shape() == Shape{3, 1, 100});
    CHECK(out.nrb.shape() == Shape{3, 1, 100});
    for (float v : out.raman.data()) CHECK((v > 0.0f && v < 1.0f));
    for (float v : out.nrb.data()) CHECK((v > 0.0f && v < 1.0f));
    CHECK_THROWS_AS(net.forward(Tensor<float>::zeros(Shape{1, 1, 99})), Error);
}

TEST_CASE("loss_total combines the weighted components") {
    auto cfg = tiny_config();
    RamPinnNet<double> net(cfg);
    const auto d = synthetic_set(2, 64, 2);
    const auto out = net.forward(input_of<double>(d, 64));
    const auto x = flat<double>(d.cars), y = flat<double>(d.raman);
    LossBreakdown p;
    const auto l = loss_total<double>(out, x, y, d.labeled, cfg, &p);
    CHECK(l.item() == doctest::Approx(10.0 * p.data + 1.0 * p.kk + 10.0 * p.smooth).epsilon(1e-12));
    CHECK(p.total == doctest::Approx(l.item()).epsilon(1e-12));

    auto zero = cfg;
    zero.lambda_data = zero.lambda_kk = zero.lambda_smooth = 0.0;
    CHECK(loss_total<double>(out, x, y, d.labeled, zero).item() == 0.0);
}

TEST_CASE("end-to-end gradient matches finite differences") {
    auto cfg = tiny_config();
    RamPinnNet<float> net(cfg);
    RamPinnNet<double> shadow(cfg);
    for (std::size_t k = 0; k < net.parameters().size(); ++k) {
        auto src = net.parameters()[k].tensor.data();
        auto dst = shadow.parameters()[k].tensor;
        for (std::size_t i = 0; i < src.size(); ++i) dst.mutable_data()[i] = static_cast<double>(src[i]);
    }
    const auto d = synthetic_set(4, 64, 3);
    const auto xf = flat<float>(d.cars), yf = flat<float>(d.raman);
    const auto xd = flat<double>(d.cars), yd = flat<double>(d.raman);

    auto out = net.forward(input_of<float>(d, 64));
    loss_total<float>(out, xf, yf, d.labeled, cfg).backward();

    auto shadow_loss = [&] {
        const auto o = shadow.forward(input_of<double>(d, 64));
        return loss_total<double>(o, xd, yd, d.labeled, cfg).item();
    };

    std::mt19937_64 rng(11);
    std::vector<std::pair<std::size_t, std::size_t>> all;
    for (std::size_t k = 0; k < net.parameters().size(); ++k) {
        for (std::size_t i = 0; i < net.parameters()[k].tensor.numel(); ++i) all.emplace_back(k, i);
    }
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(150);

    const double h = 1e-5;
    double diff = 0.0, scale = 0.0;
    for (auto [k, i] : all) {
        auto t = shadow.parameters()[k].tensor;
        const double keep = t.data()[i];
        t.mutable_data()[i] = keep + h;
        const double up = shadow_loss();
        t.mutable_data()[i] = keep - h;
        const double down = shadow_loss();
        t.mutable_data()[i] = keep;
        const double fd = (up - down) / (2.0 * h);
        const auto g = net.parameters()[k].tensor.grad();
        const double tape = g.empty() ? 0.0 : static_cast<double>(g[i]);
        diff = std::max(diff, std::abs(tape - fd));
        scale = std::max(scale, std::abs(fd));
    }
    MESSAGE("normwise relative error " << diff / scale << " over " << all.size() << " parameters");
    CHECK(scale > 0.0);
    CHECK(diff / scale < 1e-2);
}

TEST_CASE("a single sample is overfit without physics terms") {
    // The 1/16-width net bottoms out near 1e-2; a quarter width has the capacity.
    auto cfg = tiny_config();
    cfg.width_multiplier = 0.25;
    cfg.lambda_kk = cfg.lambda_smooth = 0.0;
    cfg.batch_size = 1;
    cfg.max_epochs = 500;
    cfg.patience = 500;
    cfg.lr = 1e-2;
    RamPinnNet<float> net(cfg);
    const auto d = synthetic_set(1, 64, 4);
    const auto res = train(net, d);
    REQUIRE_FALSE(res.aborted);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : res.history) best = std::min(best, r.total_train);
    MESSAGE("first " << res.history.front().total_train << " best " << best);
    CHECK(best < 1e-4);
    CHECK(res.history.back().total_train < res.history.front().total_train);
}

TEST_CASE("self-supervised training never reads labels") {
    auto cfg = tiny_config();
    cfg.lambda_data = 0.0;
    cfg.max_epochs = 3;
    auto unlabeled = synthetic_set(8, 64, 5, false);
    auto poisoned = synthetic_set(8, 64, 5, true);
    for (auto& r : poisoned.raman) std::fill(r.begin(), r.end(), std::numeric_limits<float>::quiet_NaN());

    RamPinnNet<float> a(cfg), b(cfg);
    const auto ra = train(a, unlabeled);
    const auto rb = train(b, poisoned);
    REQUIRE(ra.history.size() == rb.history.size());
    for (std::size_t e = 0; e < ra.history.size(); ++e) {
        CHECK(ra.history[e].data == 0.0);
        CHECK(ra.history[e].total_train == rb.history[e].total_train);
        CHECK(ra.history[e].total_val == rb.history[e].total_val);
    }
}

TEST_CASE("training is deterministic for a fixed seed") {
    auto cfg = tiny_config();
    cfg.max_epochs = 3;
    const auto d = synthetic_set(10, 64, 6);
    RamPinnNet<float> a(cfg), b(cfg);
    const auto ra = train(a, d), rb = train(b, d);
    REQUIRE(ra.history.size() == rb.history.size());
    for (std::size_t e = 0; e < ra.history.size(); ++e) {
        CHECK(ra.history[e].total_train == rb.history[e].total_train);
        CHECK(ra.history[e].total_val == rb.history[e].total_val);
    }
    const auto sa = a.state(), sb = b.state();
    REQUIRE(sa.size() == sb.size());
    for (std::size_t k = 0; k < sa.size(); ++k) CHECK(sa[k].values == sb[k].values);

    auto other = cfg;
    other.seed = 8;
    RamPinnNet<float> c(other);
    CHECK(train(c, d).history.front().total_train != ra.history.front().total_train);
}

TEST_CASE("training without attention") {
    auto cfg = tiny_config();
    cfg.use_attention = false;
    cfg.max_epochs = 2;
    RamPinnNet<float> net(cfg);
    const auto with = RamPinnNet<float>(tiny_config()).parameter_count();
    CHECK(net.parameter_count() < with);
    const auto res = train(net, synthetic_set(6, 64, 7));
    CHECK(res.history.size() == 2);
    const auto p = predict(net, Spectrum(WavenumberGrid(64), std::vector<double>(64, 0.5)));
    CHECK(p.raman.size() == 64);
}

TEST_CASE("non-finite inputs abort training with the best state restored") {
    auto cfg = tiny_config();
    cfg.max_epochs = 3;
    auto d = synthetic_set(4, 64, 9);
    d.cars[0][10] = std::numeric_limits<float>::infinity();
    RamPinnNet<float> net(cfg);
    const auto before = net.state();
    const auto res = train(net, d);
    CHECK(res.aborted);
    CHECK(res.abort_epoch == 1);
    const auto after = net.state();
    for (std::size_t k = 0; k < before.size(); ++k) CHECK(before[k].values == after[k].values);
}

TEST_CASE("predict") {
    auto cfg = tiny_config();
    RamPinnNet<float> net(cfg);
    const auto d = synthetic_set(3, 64, 10);
    std::vector<Spectrum> cars;
    for (const auto& r : d.cars) cars.emplace_back(WavenumberGrid(64), std::vector<double>(r.begin(), r.end()));

    SUBCASE("outputs are normalized") {
        const auto p = predict(net, cars[0]);
        CHECK(*std::max_element(p.raman.values().begin(), p.raman.values().end()) == 1.0);
        CHECK(*std::max_element(p.nrb.values().begin(), p.nrb.values().end()) == 1.0);
    }
    SUBCASE("batch of one equals the unbatched call") {
        const auto batched = predict_batch(net, cars);
        for (std::size_t i = 0; i < 3; ++i) {
            const auto single = predict(net, cars[i]);
            CHECK(single.raman.vector() == batched[i].raman.vector());
            CHECK(single.nrb.vector() == batched[i].nrb.vector());
        }
    }
    SUBCASE("other lengths are mapped back to the input grid") {
        std::vector<double> v(90);
        for (std::size_t i = 0; i < 90; ++i) v[i] = 0.5 + 0.4 * std::sin(static_cast<double>(i) / 9.0);
        const auto p = predict(net, Spectrum(WavenumberGrid(90), v));
        CHECK(p.raman.size() == 90);
        CHECK(p.nrb.size() == 90);
    }
}

TEST_CASE("resampling 900 -> 1000 -> 900 preserves a smooth spectrum") {
    std::vector<double> v(900);
    const WavenumberGrid g(900);
    for (std::size_t i = 0; i < 900; ++i) {
        v[i] = 0.5 + 0.3 * std::sin(2.0 * std::numbers::pi * 3.0 * g[i]) + 0.2 * std::exp(-std::pow((g[i] - 0.4) / 0.05, 2));
    }
    const auto back = resample_uniform(resample_uniform(v, 1000), 900);
    double err = 0.0;
    for (std::size_t i = 0; i < 900; ++i) err = std::max(err, std::abs(back[i] - v[i]));
    CHECK(err < 1e-3);
}

TEST_CASE("checkpoint round-trip reproduces predictions exactly") {
    auto cfg = tiny_config();
    cfg.max_epochs = 1;
    RamPinnNet<float> net(cfg);
    const auto d = synthetic_set(6, 64, 12);
    train(net, d);
    const auto path = std::filesystem::temp_directory_path() / "rampinn_model_ckpt_test.bin";
    nn::save_checkpoint(path, net.to_checkpoint());
    auto loaded = RamPinnNet<float>::from_checkpoint(nn::load_checkpoint(path));
    std::filesystem::remove(path);
    CHECK(loaded.config().seed == cfg.seed);
    CHECK(loaded.config().width_multiplier == cfg.width_multiplier);
    const Spectrum s(WavenumberGrid(64), std::vector<double>(d.cars[0].begin(), d.cars[0].end()));
    CHECK(predict(net, s).raman.vector() == predict(loaded, s).raman.vector());
}

TEST_CASE("config json round-trip") {
    RamPinnConfig c;
    c.lambda_kk = 0.25;
    c.use_attention = false;
    c.width_multiplier = 0.5;
    c.seed = 99;
    nlohmann::json j = c;
    const auto back = j.get<RamPinnConfig>();
    CHECK(back.lambda_kk == 0.25);
    CHECK_FALSE(back.use_attention);
    CHECK(back.width_multiplier == 0.5);
    CHECK(back.seed == 99);
    CHECK(back.encoder_channels == c.encoder_channels);
}
