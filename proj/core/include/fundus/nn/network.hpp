#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fundus/augment.hpp"
#include "fundus/features.hpp"
#include "fundus/nn/layers.hpp"

namespace fundus {

/// A network config plus its parameter tensors. Move-only.
class Model {
public:
    Model() = default;
    explicit Model(const NetworkConfig& config);

    /// He-uniform weights, zero biases, drawn in layer order from the seed.
    void init_params(std::uint64_t seed);

    const NetworkConfig& config() const { return config_; }

    /// Training-mode forward to the logits; dropout draws from dropout_rng.
    Tensor forward_train(const Tensor& x, Rng& dropout_rng);

    /// Backpropagates dLoss/dlogits, accumulating parameter gradients.
    Tensor backward(const Tensor& dlogits);

    /// Evaluation-mode logits / softmax probabilities (dropout off, no
    /// caches touched).
    std::vector<double> predict_logits(const Tensor& x) const;
    std::vector<double> predict_proba(const Tensor& x) const;

    std::vector<ParamRef> params();
    std::vector<const std::vector<double>*> param_values() const;
    void zero_grads();

private:
    NetworkConfig config_;
    std::vector<std::unique_ptr<Layer>> layers_;
};

enum class OptimizerKind { sgd_momentum, adam };

struct TrainConfig {
    int epochs = 20;
    int batch_size = 16;
    double learning_rate = 0.01;
    double l2_lambda = 0.0;
    OptimizerKind optimizer = OptimizerKind::sgd_momentum;
    std::uint64_t seed = 0;
};

struct EpochStats {
    double loss = 0.0;      // mean batch loss, L2 term included
    double accuracy = 0.0;  // fraction of training forwards that argmax'd right
};

struct TrainResult {
    Model model;
    std::vector<EpochStats> history;
};

/// Mini-batch training with a seeded sample shuffle per epoch. The loss is
/// mean cross entropy plus l2_lambda * sum of squared weights (biases
/// excluded; gradient contribution 2*lambda*w). With an augment policy, each
/// sample is re-drawn through a random affine transform every epoch from the
/// policy's own seeded stream. Aborts with a diagnostic if the loss goes
/// non-finite. Identical inputs and seeds reproduce histories bitwise.
TrainResult train(const FeatureSet& data, const NetworkConfig& config, const TrainConfig& tc,
                  const AugmentPolicy* augment = nullptr);

/// n x K softmax rows for the feature matrix (columns must match the model's
/// input size).
FeatureMatrix predict(const Model& model, const FeatureMatrix& features);

/// Max relative error between analytic gradients and central finite
/// differences over every parameter, on one sample's cross-entropy loss.
/// Dropout masks are replayed identically for every evaluation so the loss
/// stays a fixed differentiable function during the sweep.
double grad_check(const NetworkConfig& config, const Tensor& x, int label, double eps,
                  std::uint64_t seed = 42);

/// Versioned text format holding config + parameters; load_model(save_model)
/// reproduces every double bit-for-bit.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace fundus
