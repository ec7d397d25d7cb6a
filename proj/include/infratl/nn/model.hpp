#pragma once

// The surrogate CNN: four conv/tanh/max-pool blocks, flatten, frequency
// concatenation, then four batch-norm + dense blocks.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "infratl/container.hpp"
#include "infratl/nn/layers.hpp"
#include "infratl/normalizer.hpp"

namespace infratl::nn {

struct ModelConfig {
    std::size_t input_height = 1000;  // altitude levels
    std::size_t input_width = 40;     // range columns
    std::vector<std::size_t> conv_channels{32, 64, 128, 256};
    std::size_t kernel = 3;
    ActivationKind conv_activation = ActivationKind::tanh;
    std::vector<std::pair<std::size_t, std::size_t>> pools{{5, 2}, {5, 2}, {5, 2}, {1, 5}};
    std::vector<std::size_t> fc_widths{2048, 1024, 512, 400};
    ActivationKind fc_activation = ActivationKind::relu;
    ActivationKind output_activation = ActivationKind::linear;
    std::vector<double> dropout{0.4, 0.3, 0.2};
    bool batchnorm = true;
    double bn_epsilon = 1e-3;
    double bn_momentum = 0.99;

    /// Per-sample shape after the conv stack; throws ErrorKind::shape if a
    /// pool window does not divide its input.
    Shape latent_shape() const;
    std::size_t output_size() const { return fc_widths.empty() ? 0 : fc_widths.back(); }
    /// Trainable parameter count computed from the configuration alone.
    std::size_t parameter_count() const;
    void validate() const;
};

void to_json(json& j, const ModelConfig& c);
void from_json(const json& j, ModelConfig& c);

template <typename T>
class Model {
public:
    Model(ModelConfig config, std::uint64_t init_seed);

    const ModelConfig& config() const { return config_; }

    /// images: (B, H, W, 1); freqs: B normalized frequencies. Returns (B, out).
    Tensor<T> forward(const Tensor<T>& images, std::span<const T> freqs, Mode mode);

    /// Conv-stack output (B, h, w, c) for an image batch.
    Tensor<T> features(const Tensor<T>& images, Mode mode);

    /// Back-propagates d loss / d output; accumulates parameter gradients.
    /// Returns d loss / d images.
    Tensor<T> backward(const Tensor<T>& grad_out);

    /// d loss / d freqs from the last backward().
    const std::vector<T>& freq_grad() const { return freq_grad_; }

    /// Inference in chunks of batch_size.
    Tensor<T> predict(const Tensor<T>& images, std::span<const T> freqs, std::size_t batch_size = 32);

    std::vector<Param<T>*> params();
    std::vector<std::pair<std::string, Tensor<T>*>> buffers();
    void zero_grad();
    std::size_t parameter_count();

    /// Reseeds every dropout layer from its named substream for this epoch.
    void seed_dropout(std::uint64_t master, std::uint64_t epoch);

    /// Named parameters and buffers.
    std::map<std::string, Tensor<T>> state();
    void load_state(const std::map<std::string, Tensor<T>>& tensors);

    /// Per-layer table of output shapes and parameter counts.
    std::string describe();

private:
    ModelConfig config_;
    std::vector<std::unique_ptr<Layer<T>>> conv_;
    std::vector<std::unique_ptr<Layer<T>>> head_;
    std::vector<std::string> conv_names_;
    std::vector<std::string> head_names_;
    std::vector<Dropout<T>*> dropouts_;
    Shape latent_;
    std::vector<T> freq_grad_;
};

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

void to_json(json& j, const AdamConfig& c);
void from_json(const json& j, AdamConfig& c);

struct OptimizerState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::uint64_t step = 0;
    double learning_rate = 1e-4;
};

/// Bias-corrected Adam. Moments are kept in double for both precisions.
class Adam {
public:
    explicit Adam(AdamConfig config = {}) : config_(config) { state_.learning_rate = config.learning_rate; }

    template <typename T>
    void step(const std::vector<Param<T>*>& params);

    OptimizerState& state() { return state_; }
    const OptimizerState& state() const { return state_; }
    const AdamConfig& config() const { return config_; }

private:
    AdamConfig config_;
    OptimizerState state_;
};

/// Step decay: initial / factor^k after the k-th milestone, never below floor.
/// Epochs are counted from 1.
struct LrSchedule {
    double initial = 1e-4;
    double factor = 10.0;
    std::vector<int> milestones{10, 30, 50};
    double floor = 1e-7;

    double at(int epoch) const;
};

void to_json(json& j, const LrSchedule& s);
void from_json(const json& j, LrSchedule& s);

/// Stops after `patience` consecutive epochs without a strict improvement.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience = 25) : patience_(patience) {}

    /// Records an epoch's validation loss; returns true when training should stop.
    bool update(double val_loss);
    int best_epoch() const { return best_epoch_; }  // 0-based, -1 before any update
    double best_loss() const { return best_; }
    bool improved() const { return improved_; }

private:
    int patience_;
    int epoch_ = -1;
    int best_epoch_ = -1;
    double best_ = 0.0;
    bool improved_ = false;
};

/// In-memory, already normalized arrays.
template <typename T>
struct ArraySet {
    Tensor<T> images;      // (N, H, W, 1)
    std::vector<T> freqs;  // N
    Tensor<T> labels;      // (N, out)

    std::size_t size() const { return freqs.size(); }
    ArraySet subset(std::span<const std::size_t> rows) const;
};

struct TrainConfig {
    std::size_t batch_size = 32;
    int max_epochs = 150;
    int patience = 25;
    std::uint64_t seed = 0;
    AdamConfig adam;
    LrSchedule schedule;
};

void to_json(json& j, const TrainConfig& c);
void from_json(const json& j, TrainConfig& c);

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double learning_rate = 0.0;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    int best_epoch = -1;  // 0-based index into history
};

/// Splits [0, n) into shuffled mini-batches. A trailing batch of one sample is
/// merged into the previous batch so batch norm always sees at least two.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng);

/// MSE of model predictions in inference mode.
template <typename T>
double evaluate_loss(Model<T>& model, const ArraySet<T>& set, std::size_t batch_size = 32);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam training with early stopping. On return the model holds
/// the weights of the best validation epoch.
template <typename T>
TrainResult train(Model<T>& model, const ArraySet<T>& train_set, const ArraySet<T>& val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

struct Checkpoint {
    ModelConfig config;
    std::map<std::string, Tensor<float>> tensors;
    data::Normalizer normalizer;
    std::vector<EpochRecord> history;
    int best_epoch = -1;
    json extra = json::object();  // training config, seeds, provenance
};

template <typename T>
Checkpoint make_checkpoint(Model<T>& model, const data::Normalizer& normalizer,
                           const TrainResult& result, json extra = json::object());

template <typename T>
Model<T> model_from_checkpoint(const Checkpoint& ck);

Container checkpoint_to_container(const Checkpoint& ck);
Checkpoint checkpoint_from_container(const Container& c);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace infratl::nn
