#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rampinn/nn/adam.hpp"
#include "rampinn/nn/checkpoint.hpp"
#include "rampinn/nn/ops.hpp"
#include "rampinn/spectral.hpp"
#include "rampinn/synthgen.hpp"

namespace rampinn {

struct RamPinnConfig {
    std::size_t input_length = kDefaultGridLength;
    std::vector<std::size_t> encoder_channels{64, 128, 256, 512};
    std::vector<std::size_t> decoder_channels{256, 128, 64, 32};
    bool use_attention = true;
    double width_multiplier = 1.0;
    double lambda_data = 10.0;
    double lambda_kk = 1.0;
    double lambda_smooth = 10.0;
    double lr = 1e-3;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 200;
    std::size_t patience = 20;
    double clip_norm = 1.0;
    double val_fraction = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
    /// Channel counts after the width multiplier (rounded, at least 1).
    std::vector<std::size_t> scaled_encoder() const;
    std::vector<std::size_t> scaled_decoder() const;
};

void to_json(nlohmann::json& j, const RamPinnConfig& c);
void from_json(const nlohmann::json& j, RamPinnConfig& c);

template <class T>
struct ConvBlock {
    nn::Tensor<T> weight, bias, gamma, beta;
    nn::BatchNormState<T> bn;
};

template <class T>
struct NetOutput {
    nn::Tensor<T> raman;
    nn::Tensor<T> nrb;
};

/// Dual-decoder 1D U-Net. Decoder 0 predicts Raman, decoder 1 the NRB.
template <class T>
class RamPinnNet {
public:
    explicit RamPinnNet(const RamPinnConfig& cfg);

    const RamPinnConfig& config() const noexcept { return cfg_; }
    void set_training(bool on) noexcept { training_ = on; }
    bool training() const noexcept { return training_; }

    /// x: (batch, 1, input_length).
    NetOutput<T> forward(const nn::Tensor<T>& x);

    struct NamedTensor {
        std::string name;
        nn::Tensor<T> tensor;
    };
    const std::vector<NamedTensor>& parameters() const noexcept { return params_; }
    std::size_t parameter_count() const;

    /// Parameters plus batch-norm running statistics.
    std::vector<nn::NamedArray> state() const;
    void load_state(const std::vector<nn::NamedArray>& arrays);

    nn::Checkpoint to_checkpoint() const;
    static RamPinnNet from_checkpoint(const nn::Checkpoint& ckpt);

private:
    ConvBlock<T> make_block(const std::string& name, std::size_t cin, std::size_t cout, std::size_t kernel, Rng& rng);
    nn::Tensor<T> add_param(const std::string& name, nn::Shape shape, std::vector<T> values);
    nn::Tensor<T> run_block(ConvBlock<T>& b, const nn::Tensor<T>& x);
    template <class F>
    void for_each_block(F&& fn);
    template <class F>
    void for_each_block(F&& fn) const;
    nn::Tensor<T> run_decoder(std::size_t which, const nn::Tensor<T>& bottom, const std::vector<nn::Tensor<T>>& skips);

    RamPinnConfig cfg_;
    bool training_ = true;
    std::vector<NamedTensor> params_;
    std::vector<ConvBlock<T>> encoder_;
    ConvBlock<T> mid1_, mid2_;
    nn::Tensor<T> wq_, wk_, wv_;
    std::vector<ConvBlock<T>> decoders_[2];
    nn::Tensor<T> head_w_[2], head_b_[2];
};

extern template class RamPinnNet<float>;
extern template class RamPinnNet<double>;

struct LossBreakdown {
    double data = 0.0;
    double kk = 0.0;
    double smooth = 0.0;
    double total = 0.0;
};

/// lambda_data * MSE + lambda_kk * L_KK + lambda_smooth * L_smooth. The data
/// term only covers samples whose mask entry is set; an all-zero or empty
/// target contributes nothing.
template <class T>
nn::Tensor<T> loss_total(const NetOutput<T>& out, std::span<const T> x, std::span<const T> target,
                         std::span<const unsigned char> labeled, const RamPinnConfig& cfg, LossBreakdown* parts = nullptr);

/// Training data held as flat float rows of input_length.
struct TrainSet {
    std::vector<std::vector<float>> cars;
    std::vector<std::vector<float>> raman;  // may be empty rows for unlabeled samples
    std::vector<unsigned char> labeled;

    std::size_t size() const noexcept { return cars.size(); }
};

struct EpochRecord {
    std::size_t epoch = 0;
    double data = 0.0;
    double kk = 0.0;
    double smooth = 0.0;
    double total_train = 0.0;
    double total_val = 0.0;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_val = 0.0;
    bool aborted = false;       // non-finite gradient; best state restored
    std::size_t abort_epoch = 0;
    std::string abort_message;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam with early stopping on validation L_total. Validation is
/// the trailing val_fraction of `data` (the whole set when it has one sample).
TrainResult train(RamPinnNet<float>& net, const TrainSet& data, const EpochCallback& on_epoch = {});

/// Mean validation-style losses (eval mode, no tape) over a set.
LossBreakdown evaluate_losses(RamPinnNet<float>& net, const TrainSet& data, std::size_t begin, std::size_t end);

struct Prediction {
    Spectrum raman;
    Spectrum nrb;
};

/// Resamples to the model length (endpoints preserved), runs in eval mode,
/// maps back to the input grid and normalizes both outputs. Each spectrum
/// gets its own forward pass, so results do not depend on what else is in
/// the list.
Prediction predict(RamPinnNet<float>& net, const Spectrum& cars);
std::vector<Prediction> predict_batch(RamPinnNet<float>& net, const std::vector<Spectrum>& cars);

}  // namespace rampinn
