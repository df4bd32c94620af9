#include "rampinn/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

#include "rampinn/error.hpp"
#include "rampinn/synthgen.hpp"

namespace rampinn {

using nn::Shape;
using nn::Tensor;

void RamPinnConfig::validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); };
    if (encoder_channels.empty() || encoder_channels.size() != decoder_channels.size()) {
        bad("encoder and decoder must have the same non-zero number of stages");
    }
    for (auto c : encoder_channels) if (c == 0) bad("encoder channels must be positive");
    for (auto c : decoder_channels) if (c == 0) bad("decoder channels must be positive");
    if (!(width_multiplier > 0.0 && width_multiplier <= 1.0)) bad("width_multiplier must be in (0, 1]");
    if (!(lambda_data >= 0.0 && lambda_kk >= 0.0 && lambda_smooth >= 0.0)) bad("loss weights must be non-negative");
    if (!(lr > 0.0)) bad("learning rate must be positive");
    if (batch_size == 0) bad("batch_size must be positive");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) bad("val_fraction must be in [0, 1)");
    if ((input_length >> encoder_channels.size()) < 1) {
        bad("input_length " + std::to_string(input_length) + " is too short for " +
            std::to_string(encoder_channels.size()) + " pooling stages");
    }
}

namespace {
std::vector<std::size_t> scale_channels(const std::vector<std::size_t>& cs, double w) {
    std::vector<std::size_t> out;
    for (auto c : cs) out.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(c * w))));
    return out;
}
}  // namespace

std::vector<std::size_t> RamPinnConfig::scaled_encoder() const { return scale_channels(encoder_channels, width_multiplier); }
std::vector<std::size_t> RamPinnConfig::scaled_decoder() const { return scale_channels(decoder_channels, width_multiplier); }

void to_json(nlohmann::json& j, const RamPinnConfig& c) {
    j = nlohmann::json{{"input_length", c.input_length},
                       {"encoder_channels", c.encoder_channels},
                       {"decoder_channels", c.decoder_channels},
                       {"use_attention", c.use_attention},
                       {"width_multiplier", c.width_multiplier},
                       {"lambda_data", c.lambda_data},
                       {"lambda_kk", c.lambda_kk},
                       {"lambda_smooth", c.lambda_smooth},
                       {"lr", c.lr},
                       {"batch_size", c.batch_size},
                       {"max_epochs", c.max_epochs},
                       {"patience", c.patience},
                       {"clip_norm", c.clip_norm},
                       {"val_fraction", c.val_fraction},
                       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, RamPinnConfig& c) {
    RamPinnConfig d;
    c.input_length = j.value("input_length", d.input_length);
    c.encoder_channels = j.value("encoder_channels", d.encoder_channels);
    c.decoder_channels = j.value("decoder_channels", d.decoder_channels);
    c.use_attention = j.value("use_attention", d.use_attention);
    c.width_multiplier = j.value("width_multiplier", d.width_multiplier);
    c.lambda_data = j.value("lambda_data", d.lambda_data);
    c.lambda_kk = j.value("lambda_kk", d.lambda_kk);
    c.lambda_smooth = j.value("lambda_smooth", d.lambda_smooth);
    c.lr = j.value("lr", d.lr);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.max_epochs = j.value("max_epochs", d.max_epochs);
    c.patience = j.value("patience", d.patience);
    c.clip_norm = j.value("clip_norm", d.clip_norm);
    c.val_fraction = j.value("val_fraction", d.val_fraction);
    c.seed = j.value("seed", d.seed);
}

template <class T>
Tensor<T> RamPinnNet<T>::add_param(const std::string& name, Shape shape, std::vector<T> values) {
    auto t = Tensor<T>::leaf(shape, std::move(values));
    params_.push_back({name, t});
    return t;
}

template <class T>
ConvBlock<T> RamPinnNet<T>::make_block(const std::string& name, std::size_t cin, std::size_t cout, std::size_t kernel,
                                       Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(cin * kernel));
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<T> w(cout * cin * kernel);
    for (auto& v : w) v = static_cast<T>(u(rng));
    ConvBlock<T> b;
    b.weight = add_param(name + ".conv.weight", Shape{cout, cin, kernel}, std::move(w));
    b.bias = add_param(name + ".conv.bias", Shape{1, cout, 1}, std::vector<T>(cout, T(0)));
    b.gamma = add_param(name + ".bn.weight", Shape{1, cout, 1}, std::vector<T>(cout, T(1)));
    b.beta = add_param(name + ".bn.bias", Shape{1, cout, 1}, std::vector<T>(cout, T(0)));
    b.bn = nn::BatchNormState<T>(cout);
    return b;
}

template <class T>
RamPinnNet<T>::RamPinnNet(const RamPinnConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(cfg_.seed);
    const auto enc = cfg_.scaled_encoder();
    const auto dec = cfg_.scaled_decoder();
    const std::size_t stages = enc.size();
    constexpr std::size_t k = 5;

    std::size_t cin = 1;
    for (std::size_t i = 0; i < stages; ++i) {
        encoder_.push_back(make_block("enc" + std::to_string(i + 1), cin, enc[i], k, rng));
        cin = enc[i];
    }
    const std::size_t cb = enc.back();
    mid1_ = make_block("mid1", cb, cb, k, rng);
    if (cfg_.use_attention) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(cb));
        std::uniform_real_distribution<double> u(-bound, bound);
        auto proj = [&](const char* name) {
            std::vector<T> w(cb * cb);
            for (auto& v : w) v = static_cast<T>(u(rng));
            return add_param(std::string("attn.") + name, Shape{1, cb, cb}, std::move(w));
        };
        wq_ = proj("query");
        wk_ = proj("key");
        wv_ = proj("value");
    }
    mid2_ = make_block("mid2", cb, cb, k, rng);

    const char* heads[2] = {"raman", "nrb"};
    for (std::size_t d = 0; d < 2; ++d) {
        std::size_t c = cb;
        for (std::size_t i = 0; i < stages; ++i) {
            decoders_[d].push_back(make_block(std::string(heads[d]) + ".dec" + std::to_string(i + 1), c, dec[i], k, rng));
            c = dec[i] + enc[stages - 1 - i];
        }
        const double bound = std::sqrt(6.0 / static_cast<double>(c));
        std::uniform_real_distribution<double> u(-bound, bound);
        std::vector<T> w(c);
        for (auto& v : w) v = static_cast<T>(u(rng));
        head_w_[d] = add_param(std::string(heads[d]) + ".head.weight", Shape{1, c, 1}, std::move(w));
        head_b_[d] = add_param(std::string(heads[d]) + ".head.bias", Shape{1, 1, 1}, {T(0)});
    }
}

template <class T>
template <class F>
void RamPinnNet<T>::for_each_block(F&& fn) {
    for (std::size_t i = 0; i < encoder_.size(); ++i) fn("enc" + std::to_string(i + 1), encoder_[i]);
    fn(std::string("mid1"), mid1_);
    fn(std::string("mid2"), mid2_);
    const char* heads[2] = {"raman", "nrb"};
    for (std::size_t d = 0; d < 2; ++d) {
        for (std::size_t i = 0; i < decoders_[d].size(); ++i) {
            fn(std::string(heads[d]) + ".dec" + std::to_string(i + 1), decoders_[d][i]);
        }
    }
}

template <class T>
template <class F>
void RamPinnNet<T>::for_each_block(F&& fn) const {
    const_cast<RamPinnNet*>(this)->for_each_block(
        [&](const std::string& name, ConvBlock<T>& b) { fn(name, static_cast<const ConvBlock<T>&>(b)); });
}

template <class T>
Tensor<T> RamPinnNet<T>::run_block(ConvBlock<T>& b, const Tensor<T>& x) {
    const std::size_t pad = b.weight.shape().length / 2;
    auto h = nn::conv1d(x, b.weight, b.bias, pad);
    h = nn::batch_norm1d(h, b.gamma, b.beta, b.bn, training_);
    return nn::relu(h);
}

template <class T>
Tensor<T> RamPinnNet<T>::run_decoder(std::size_t which, const Tensor<T>& bottom, const std::vector<Tensor<T>>& skips) {
    Tensor<T> h = bottom;
    const std::size_t stages = decoders_[which].size();
    for (std::size_t i = 0; i < stages; ++i) {
        h = nn::upsample_linear(h, 2);
        h = run_block(decoders_[which][i], h);
        const auto& skip = skips[stages - 1 - i];
        if (h.shape().length != skip.shape().length) h = nn::interpolate_linear(h, skip.shape().length);
        h = nn::concat_channels(h, skip);
    }
    h = nn::conv1d(h, head_w_[which], head_b_[which], 0);
    h = nn::sigmoid(h);
    if (h.shape().length != cfg_.input_length) h = nn::interpolate_linear(h, cfg_.input_length);
    return h;
}

template <class T>
NetOutput<T> RamPinnNet<T>::forward(const Tensor<T>& x) {
    const Shape s = x.shape();
    if (s.channels != 1 || s.length != cfg_.input_length) {
        throw Error(ErrorKind::ShapeMismatch, "model expects (batch, 1, " + std::to_string(cfg_.input_length) +
                                                  ") input, got " + nn::to_string(s));
    }
    std::vector<Tensor<T>> skips;
    Tensor<T> h = x;
    for (auto& block : encoder_) {
        auto e = run_block(block, h);
        skips.push_back(e);
        h = nn::avg_pool1d(e, 2);
    }
    h = run_block(mid1_, h);
    if (cfg_.use_attention) h = nn::self_attention_1d(h, wq_, wk_, wv_);
    h = run_block(mid2_, h);
    return NetOutput<T>{run_decoder(0, h, skips), run_decoder(1, h, skips)};
}

template <class T>
std::size_t RamPinnNet<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.tensor.numel();
    return n;
}

template <class T>
std::vector<nn::NamedArray> RamPinnNet<T>::state() const {
    std::vector<nn::NamedArray> out;
    for (const auto& p : params_) {
        const auto d = p.tensor.data();
        out.push_back({p.name, p.tensor.shape(), std::vector<float>(d.begin(), d.end())});
    }
    for_each_block([&](const std::string& name, const ConvBlock<T>& b) {
        const std::size_t c = b.bn.running_mean.size();
        out.push_back({name + ".bn.running_mean", Shape{1, c, 1},
                       std::vector<float>(b.bn.running_mean.begin(), b.bn.running_mean.end())});
        out.push_back({name + ".bn.running_var", Shape{1, c, 1},
                       std::vector<float>(b.bn.running_var.begin(), b.bn.running_var.end())});
    });
    return out;
}

template <class T>
void RamPinnNet<T>::load_state(const std::vector<nn::NamedArray>& arrays) {
    std::unordered_map<std::string, const nn::NamedArray*> index;
    for (const auto& a : arrays) index[a.name] = &a;
    auto fetch = [&](const std::string& name, Shape shape) -> const nn::NamedArray& {
        auto it = index.find(name);
        if (it == index.end()) throw Error(ErrorKind::Parse, "state is missing array " + name);
        if (it->second->shape != shape) {
            throw Error(ErrorKind::ShapeMismatch, "array " + name + " has shape " + nn::to_string(it->second->shape) +
                                                      ", expected " + nn::to_string(shape));
        }
        return *it->second;
    };
    for (auto& p : params_) {
        const auto& a = fetch(p.name, p.tensor.shape());
        auto d = p.tensor.mutable_data();
        std::copy(a.values.begin(), a.values.end(), d.begin());
    }
    for_each_block([&](const std::string& name, ConvBlock<T>& b) {
        const Shape s{1, b.bn.running_mean.size(), 1};
        const auto& m = fetch(name + ".bn.running_mean", s);
        const auto& v = fetch(name + ".bn.running_var", s);
        std::copy(m.values.begin(), m.values.end(), b.bn.running_mean.begin());
        std::copy(v.values.begin(), v.values.end(), b.bn.running_var.begin());
    });
}

template <class T>
nn::Checkpoint RamPinnNet<T>::to_checkpoint() const {
    nn::Checkpoint ck;
    ck.config = cfg_;
    ck.arrays = state();
    return ck;
}

template <class T>
RamPinnNet<T> RamPinnNet<T>::from_checkpoint(const nn::Checkpoint& ckpt) {
    RamPinnConfig cfg = ckpt.config.get<RamPinnConfig>();
    RamPinnNet net(cfg);
    net.load_state(ckpt.arrays);
    return net;
}

template class RamPinnNet<float>;
template class RamPinnNet<double>;

template <class T>
Tensor<T> loss_total(const NetOutput<T>& out, std::span<const T> x, std::span<const T> target,
                     std::span<const unsigned char> labeled, const RamPinnConfig& cfg, LossBreakdown* parts) {
    auto kk = nn::kk_loss(out.raman, x, out.nrb);
    auto sm = nn::smooth_loss(out.nrb);
    Tensor<T> total = nn::add(nn::scale(kk, cfg.lambda_kk), nn::scale(sm, cfg.lambda_smooth));
    double data_value = 0.0;
    // Self-supervised runs never look at the labels.
    if (cfg.lambda_data > 0.0 && !target.empty()) {
        auto data = nn::mse_loss(out.raman, target, labeled);
        data_value = data.item();
        total = nn::add(nn::scale(data, cfg.lambda_data), total);
    }
    if (parts) {
        parts->data = data_value;
        parts->kk = kk.item();
        parts->smooth = sm.item();
        parts->total = total.item();
    }
    return total;
}

template Tensor<float> loss_total(const NetOutput<float>&, std::span<const float>, std::span<const float>,
                                  std::span<const unsigned char>, const RamPinnConfig&, LossBreakdown*);
template Tensor<double> loss_total(const NetOutput<double>&, std::span<const double>, std::span<const double>,
                                   std::span<const unsigned char>, const RamPinnConfig&, LossBreakdown*);

namespace {

struct Batch {
    std::vector<float> x;
    std::vector<float> y;
    std::vector<unsigned char> mask;
    std::size_t size = 0;
};

Batch make_batch(const TrainSet& data, std::span<const std::size_t> idx, std::size_t length, bool with_labels) {
    Batch b;
    b.size = idx.size();
    b.x.reserve(idx.size() * length);
    for (auto i : idx) {
        if (data.cars[i].size() != length) {
            throw Error(ErrorKind::LengthMismatch, "sample " + std::to_string(i) + " has length " +
                                                       std::to_string(data.cars[i].size()) + ", model expects " +
                                                       std::to_string(length));
        }
        b.x.insert(b.x.end(), data.cars[i].begin(), data.cars[i].end());
    }
    if (!with_labels) return b;
    bool any = false;
    for (auto i : idx) {
        const bool has = i < data.labeled.size() && data.labeled[i] != 0;
        b.mask.push_back(has ? 1 : 0);
        if (has) {
            if (data.raman[i].size() != length) {
                throw Error(ErrorKind::LengthMismatch, "label " + std::to_string(i) + " has the wrong length");
            }
            b.y.insert(b.y.end(), data.raman[i].begin(), data.raman[i].end());
            any = true;
        } else {
            b.y.insert(b.y.end(), length, 0.0f);
        }
    }
    if (!any) {
        b.y.clear();
        b.mask.clear();
    }
    return b;
}

Tensor<float> input_tensor(const Batch& b, std::size_t length) {
    return Tensor<float>::constant(Shape{b.size, 1, length}, b.x);
}

}  // namespace

LossBreakdown evaluate_losses(RamPinnNet<float>& net, const TrainSet& data, std::size_t begin, std::size_t end) {
    if (begin >= end) throw Error(ErrorKind::EmptyInput, "no samples to evaluate");
    const auto& cfg = net.config();
    const bool was_training = net.training();
    net.set_training(false);
    nn::NoGradGuard guard;
    LossBreakdown acc;
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    for (std::size_t s = 0; s < idx.size(); s += cfg.batch_size) {
        const std::size_t e = std::min(idx.size(), s + cfg.batch_size);
        const auto batch = make_batch(data, std::span(idx).subspan(s, e - s), cfg.input_length, cfg.lambda_data > 0.0);
        const auto out = net.forward(input_tensor(batch, cfg.input_length));
        LossBreakdown p;
        loss_total<float>(out, batch.x, batch.y, batch.mask, cfg, &p);
        const double w = static_cast<double>(batch.size);
        acc.data += p.data * w;
        acc.kk += p.kk * w;
        acc.smooth += p.smooth * w;
        acc.total += p.total * w;
    }
    const double n = static_cast<double>(idx.size());
    acc.data /= n;
    acc.kk /= n;
    acc.smooth /= n;
    acc.total /= n;
    net.set_training(was_training);
    return acc;
}

TrainResult train(RamPinnNet<float>& net, const TrainSet& data, const EpochCallback& on_epoch) {
    const auto& cfg = net.config();
    const std::size_t n = data.size();
    if (n == 0) throw Error(ErrorKind::EmptyInput, "training set is empty");
    std::size_t n_val = 0;
    if (n > 1 && cfg.val_fraction > 0.0) {
        n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(static_cast<double>(n) * cfg.val_fraction)));
    }
    const std::size_t n_train = n - n_val;
    const std::size_t val_begin = n_val ? n_train : 0;

    nn::Adam<float> opt(nn::AdamOptions{cfg.lr, 0.9, 0.999, 1e-8, cfg.clip_norm});
    for (const auto& p : net.parameters()) opt.add(p.name, p.tensor);

    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    result.best_val = std::numeric_limits<double>::infinity();
    auto best_state = net.state();
    std::size_t stale = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        net.set_training(true);
        std::shuffle(order.begin(), order.end(), rng);
        LossBreakdown acc;
        try {
            for (std::size_t s = 0; s < n_train; s += cfg.batch_size) {
                const std::size_t e = std::min(n_train, s + cfg.batch_size);
                const auto batch =
                    make_batch(data, std::span(order).subspan(s, e - s), cfg.input_length, cfg.lambda_data > 0.0);
                const auto out = net.forward(input_tensor(batch, cfg.input_length));
                LossBreakdown p;
                auto loss = loss_total<float>(out, batch.x, batch.y, batch.mask, cfg, &p);
                if (!std::isfinite(p.total)) throw Error(ErrorKind::NonFiniteGradient, "training loss is not finite");
                loss.backward();
                opt.step();
                opt.zero_grad();
                const double w = static_cast<double>(batch.size);
                acc.data += p.data * w;
                acc.kk += p.kk * w;
                acc.smooth += p.smooth * w;
                acc.total += p.total * w;
            }
        } catch (const Error& err) {
            if (err.kind() != ErrorKind::NonFiniteGradient) throw;
            net.load_state(best_state);
            result.aborted = true;
            result.abort_epoch = epoch;
            result.abort_message = err.what();
            return result;
        }
        const double w = static_cast<double>(n_train);
        EpochRecord rec{epoch, acc.data / w, acc.kk / w, acc.smooth / w, acc.total / w, 0.0};
        rec.total_val = evaluate_losses(net, data, val_begin, n).total;
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (rec.total_val < result.best_val) {
            result.best_val = rec.total_val;
            result.best_epoch = epoch;
            best_state = net.state();
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
    }
    net.load_state(best_state);
    net.set_training(false);
    return result;
}

std::vector<Prediction> predict_batch(RamPinnNet<float>& net, const std::vector<Spectrum>& cars) {
    const std::size_t L = net.config().input_length;
    const bool was_training = net.training();
    net.set_training(false);
    nn::NoGradGuard guard;
    std::vector<Prediction> out;
    out.reserve(cars.size());
    for (const auto& c : cars) {
        const auto scaled = normalized_values(c.values());
        auto x = scaled.size() == L ? scaled : resample_uniform(scaled, L);
        const auto res = net.forward(Tensor<float>::constant(Shape{1, 1, L}, std::vector<float>(x.begin(), x.end())));
        auto back = [&](const Tensor<float>& t) {
            std::vector<double> v(t.data().begin(), t.data().end());
            if (c.size() != L) v = resample_uniform(v, c.size());
            return normalize(Spectrum(c.grid(), std::move(v)));
        };
        out.push_back(Prediction{back(res.raman), back(res.nrb)});
    }
    net.set_training(was_training);
    return out;
}

Prediction predict(RamPinnNet<float>& net, const Spectrum& cars) { return predict_batch(net, {cars}).front(); }

}  // namespace rampinn
