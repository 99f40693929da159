#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fundus/nn/tensor.hpp"
#include "fundus/rng.hpp"

namespace fundus {

enum class LayerKind { conv, relu, maxpool, flatten, dense, dropout, softmax };

/// conv: units = filter count (3x3 kernels, stride 1, same padding).
/// dense: units = output width. dropout: rate in [0,1). softmax: units = K,
/// must be the final spec.
struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    int units = 0;
    double rate = 0.0;
};

struct NetworkConfig {
    int input_width = 0;
    int input_height = 0;
    int input_channels = 1;
    std::vector<LayerSpec> layers;

    /// Conv(8)-ReLU-Pool, Conv(16)-ReLU-Pool, Flatten, Dense(64)-ReLU-
    /// Dropout(0.5), Dense(K)-Softmax.
    static NetworkConfig default_config(int width, int height, int channels, int num_classes);

    /// Throws std::invalid_argument unless shapes chain (even dims at every
    /// maxpool, dense after flatten) and the final spec is softmax.
    void validate() const;

    int num_classes() const;
    std::size_t input_size() const {
        return static_cast<std::size_t>(input_width) * input_height * input_channels;
    }
};

/// One parameter block of a layer. grads accumulates dLoss/dvalues between
/// zero_grads() and the optimizer step; regularized marks weights (L2
/// applies) as opposed to biases.
struct ParamRef {
    std::vector<double>* values;
    std::vector<double>* grads;
    bool regularized;
};

class Layer {
public:
    virtual ~Layer() = default;

    /// Training-mode forward; caches whatever backward needs. dropout_rng is
    /// consumed only by dropout layers.
    virtual Tensor forward(const Tensor& x, Rng& dropout_rng) = 0;

    /// dLoss/dOutput in, dLoss/dInput out; parameter gradients accumulate
    /// into the blocks reported by collect_params. Must follow the matching
    /// forward.
    virtual Tensor backward(const Tensor& dy) = 0;

    /// Evaluation-mode forward: no caching, dropout is the identity.
    virtual Tensor apply(const Tensor& x) const = 0;

    virtual void init_params(Rng&) {}
    virtual void collect_params(std::vector<ParamRef>&) {}
    virtual void collect_values(std::vector<const std::vector<double>*>& out) const;
};

/// Instantiates the layer stack for a validated config (softmax spec
/// excluded; the loss head and predict apply softmax themselves).
std::vector<std::unique_ptr<Layer>> build_layers(const NetworkConfig& config);

/// Numerically stable softmax.
std::vector<double> softmax(const std::vector<double>& logits);

/// loss = -log softmax(logits)[label]; dlogits = softmax(logits) - onehot.
struct LossGrad {
    double loss = 0.0;
    std::vector<double> dlogits;
};
LossGrad softmax_cross_entropy(const std::vector<double>& logits, int label);

}  // namespace fundus
