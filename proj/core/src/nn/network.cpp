#include "fundus/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace fundus {

Model::Model(const NetworkConfig& config) : config_(config), layers_(build_layers(config)) {}

void Model::init_params(std::uint64_t seed) {
    Rng rng(seed);
    for (auto& layer : layers_) layer->init_params(rng);
}

Tensor Model::forward_train(const Tensor& x, Rng& dropout_rng) {
    Tensor t = x;
    for (auto& layer : layers_) t = layer->forward(t, dropout_rng);
    return t;
}

Tensor Model::backward(const Tensor& dlogits) {
    Tensor g = dlogits;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

std::vector<double> Model::predict_logits(const Tensor& x) const {
    Tensor t = x;
    for (const auto& layer : layers_) t = layer->apply(t);
    return t.data;
}

std::vector<double> Model::predict_proba(const Tensor& x) const {
    return softmax(predict_logits(x));
}

std::vector<ParamRef> Model::params() {
    std::vector<ParamRef> refs;
    for (auto& layer : layers_) layer->collect_params(refs);
    return refs;
}

std::vector<const std::vector<double>*> Model::param_values() const {
    std::vector<const std::vector<double>*> values;
    for (const auto& layer : layers_) layer->collect_values(values);
    return values;
}

void Model::zero_grads() {
    for (auto& ref : params()) std::fill(ref.grads->begin(), ref.grads->end(), 0.0);
}

namespace {

class Optimizer {
public:
    Optimizer(OptimizerKind kind, double lr, std::vector<ParamRef> refs)
        : kind_(kind), lr_(lr), refs_(std::move(refs)) {
        for (const auto& ref : refs_) {
            slot_m_.emplace_back(ref.values->size(), 0.0);
            slot_v_.emplace_back(ref.values->size(), 0.0);
        }
    }

    void step() {
        ++t_;
        for (std::size_t b = 0; b < refs_.size(); ++b) {
            auto& w = *refs_[b].values;
            const auto& g = *refs_[b].grads;
            auto& m = slot_m_[b];
            auto& v = slot_v_[b];
            if (kind_ == OptimizerKind::sgd_momentum) {
                for (std::size_t i = 0; i < w.size(); ++i) {
                    m[i] = 0.9 * m[i] - lr_ * g[i];
                    w[i] += m[i];
                }
            } else {
                const double c1 = 1.0 - std::pow(0.9, t_);
                const double c2 = 1.0 - std::pow(0.999, t_);
                for (std::size_t i = 0; i < w.size(); ++i) {
                    m[i] = 0.9 * m[i] + 0.1 * g[i];
                    v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
                    w[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + 1e-8);
                }
            }
        }
    }

private:
    OptimizerKind kind_;
    double lr_;
    std::vector<ParamRef> refs_;
    std::vector<std::vector<double>> slot_m_, slot_v_;
    double t_ = 0.0;
};

int argmax(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TrainResult train(const FeatureSet& data, const NetworkConfig& config, const TrainConfig& tc,
                  const AugmentPolicy* augment) {
    config.validate();
    if (data.size() == 0) throw std::invalid_argument("train: empty training set");
    if (data.features.cols != config.input_size() || data.image_width != config.input_width ||
        data.image_height != config.input_height ||
        data.image_channels != config.input_channels) {
        throw std::invalid_argument("train: feature shape does not match network input");
    }
    const int k = config.num_classes();
    for (const int label : data.labels) {
        if (label < 0 || label >= k) {
            throw std::invalid_argument("train: label " + std::to_string(label) +
                                        " outside 0.." + std::to_string(k - 1));
        }
    }
    if (tc.epochs < 1 || tc.batch_size < 1 || tc.learning_rate < 0.0 || tc.l2_lambda < 0.0) {
        throw std::invalid_argument("train: bad training config");
    }

    TrainResult result;
    result.model = Model(config);
    result.model.init_params(derive_seed(tc.seed, 101));
    Rng rng_shuffle(derive_seed(tc.seed, 102));
    Rng rng_dropout(derive_seed(tc.seed, 103));
    Rng rng_augment(augment ? augment->seed : 0);

    Optimizer opt(tc.optimizer, tc.learning_rate, result.model.params());
    const auto refs = result.model.params();

    const std::size_t n = data.size();
    const std::size_t batch = static_cast<std::size_t>(tc.batch_size);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    std::vector<double> row;
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        rng_shuffle.shuffle(order.begin(), order.end());
        double loss_sum = 0.0;
        std::size_t batches = 0, correct = 0;

        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t bn = std::min(batch, n - start);
            result.model.zero_grads();
            double ce_sum = 0.0;

            for (std::size_t s = start; s < start + bn; ++s) {
                const std::size_t idx = order[s];
                const double* src = data.features.row(idx);
                Tensor x;
                if (augment) {
                    row.assign(src, src + data.features.cols);
                    Image img = features_to_image(row, data.image_width, data.image_height,
                                                  data.image_channels);
                    const AffineSpec spec = sample_spec(*augment, rng_augment);
                    row = rescale_to_features(apply_affine(img, spec));
                    x = row_to_tensor(row.data(), data.image_width, data.image_height,
                                      data.image_channels);
                } else {
                    x = row_to_tensor(src, data.image_width, data.image_height,
                                      data.image_channels);
                }

                const Tensor logits = result.model.forward_train(x, rng_dropout);
                LossGrad lg = softmax_cross_entropy(logits.data, data.labels[idx]);
                ce_sum += lg.loss;
                if (argmax(logits.data) == data.labels[idx]) ++correct;

                Tensor dlogits({k});
                dlogits.data = std::move(lg.dlogits);
                result.model.backward(dlogits);
            }

            // Gradients hold batch sums; make them means, then add the L2
            // term 2*lambda*w to weight blocks.
            double weight_sq = 0.0;
            for (const auto& ref : refs) {
                const double inv = 1.0 / static_cast<double>(bn);
                for (std::size_t i = 0; i < ref.grads->size(); ++i) {
                    (*ref.grads)[i] *= inv;
                }
                if (ref.regularized && tc.l2_lambda > 0.0) {
                    for (std::size_t i = 0; i < ref.values->size(); ++i) {
                        const double w = (*ref.values)[i];
                        weight_sq += w * w;
                        (*ref.grads)[i] += 2.0 * tc.l2_lambda * w;
                    }
                }
            }

            const double batch_loss = ce_sum / static_cast<double>(bn) +
                                      tc.l2_lambda * weight_sq;
            if (!std::isfinite(batch_loss)) {
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch + 1) + ", batch " +
                                         std::to_string(batches + 1));
            }
            opt.step();
            loss_sum += batch_loss;
            ++batches;
        }

        result.history.push_back({loss_sum / static_cast<double>(batches),
                                  static_cast<double>(correct) / static_cast<double>(n)});
    }
    return result;
}

FeatureMatrix predict(const Model& model, const FeatureMatrix& features) {
    const NetworkConfig& config = model.config();
    if (features.cols != config.input_size()) {
        throw std::invalid_argument("predict: feature width " + std::to_string(features.cols) +
                                    " does not match network input " +
                                    std::to_string(config.input_size()));
    }
    const int k = config.num_classes();
    FeatureMatrix scores(features.rows, static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < features.rows; ++i) {
        const Tensor x = row_to_tensor(features.row(i), config.input_width,
                                       config.input_height, config.input_channels);
        const std::vector<double> p = model.predict_proba(x);
        std::copy(p.begin(), p.end(), scores.row(i));
    }
    return scores;
}

double grad_check(const NetworkConfig& config, const Tensor& x, int label, double eps,
                  std::uint64_t seed) {
    Model model(config);
    model.init_params(seed);
    const std::uint64_t mask_seed = derive_seed(seed, 9999);

    const auto loss_at = [&]() {
        Rng drop(mask_seed);
        const Tensor logits = model.forward_train(x, drop);
        return softmax_cross_entropy(logits.data, label).loss;
    };

    model.zero_grads();
    Rng drop(mask_seed);
    const Tensor logits = model.forward_train(x, drop);
    LossGrad lg = softmax_cross_entropy(logits.data, label);
    Tensor dlogits({config.num_classes()});
    dlogits.data = std::move(lg.dlogits);
    model.backward(dlogits);

    auto refs = model.params();
    std::vector<std::vector<double>> analytic;
    analytic.reserve(refs.size());
    for (const auto& ref : refs) analytic.push_back(*ref.grads);

    double max_rel = 0.0;
    for (std::size_t b = 0; b < refs.size(); ++b) {
        auto& values = *refs[b].values;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double orig = values[i];
            values[i] = orig + eps;
            const double up = loss_at();
            values[i] = orig - eps;
            const double down = loss_at();
            values[i] = orig;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[b][i];
            const double rel = std::abs(a - numeric) /
                               std::max({std::abs(a), std::abs(numeric), 1e-6});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

namespace {

const char* kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv: return "conv";
        case LayerKind::relu: return "relu";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::flatten: return "flatten";
        case LayerKind::dense: return "dense";
        case LayerKind::dropout: return "dropout";
        case LayerKind::softmax: return "softmax";
    }
    return "?";
}

}  // namespace

void save_model(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");

    const NetworkConfig& config = model.config();
    out << "FUNDUS_MODEL 1\n";
    out << "input " << config.input_width << ' ' << config.input_height << ' '
        << config.input_channels << '\n';
    out << "layers " << config.layers.size() << '\n';
    char buf[48];
    for (const LayerSpec& spec : config.layers) {
        out << kind_name(spec.kind);
        if (spec.kind == LayerKind::conv || spec.kind == LayerKind::dense ||
            spec.kind == LayerKind::softmax) {
            out << ' ' << spec.units;
        } else if (spec.kind == LayerKind::dropout) {
            std::snprintf(buf, sizeof buf, " %.17g", spec.rate);
            out << buf;
        }
        out << '\n';
    }

    const auto blocks = model.param_values();
    out << "params " << blocks.size() << '\n';
    for (const auto* block : blocks) {
        out << "block " << block->size() << '\n';
        for (std::size_t i = 0; i < block->size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", (*block)[i]);
            out << buf << ((i + 1) % 8 == 0 || i + 1 == block->size() ? '\n' : ' ');
        }
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");

    std::string word;
    int version = 0;
    if (!(in >> word >> version) || word != "FUNDUS_MODEL") {
        throw std::runtime_error(path + ": not a model file");
    }
    if (version != 1) {
        throw std::runtime_error(path + ": unsupported model version " +
                                 std::to_string(version));
    }

    NetworkConfig config;
    std::size_t layer_count = 0;
    if (!(in >> word >> config.input_width >> config.input_height >> config.input_channels) ||
        word != "input" || !(in >> word >> layer_count) || word != "layers") {
        throw std::runtime_error(path + ": malformed model header");
    }
    for (std::size_t i = 0; i < layer_count; ++i) {
        if (!(in >> word)) throw std::runtime_error(path + ": truncated layer list");
        LayerSpec spec;
        if (word == "conv" || word == "dense" || word == "softmax") {
            spec.kind = word == "conv" ? LayerKind::conv
                        : word == "dense" ? LayerKind::dense
                                          : LayerKind::softmax;
            if (!(in >> spec.units)) throw std::runtime_error(path + ": missing layer width");
        } else if (word == "dropout") {
            spec.kind = LayerKind::dropout;
            if (!(in >> spec.rate)) throw std::runtime_error(path + ": missing dropout rate");
        } else if (word == "relu") {
            spec.kind = LayerKind::relu;
        } else if (word == "maxpool") {
            spec.kind = LayerKind::maxpool;
        } else if (word == "flatten") {
            spec.kind = LayerKind::flatten;
        } else {
            throw std::runtime_error(path + ": unknown layer kind '" + word + "'");
        }
        config.layers.push_back(spec);
    }

    Model model(config);
    auto refs = model.params();
    std::size_t block_count = 0;
    if (!(in >> word >> block_count) || word != "params" || block_count != refs.size()) {
        throw std::runtime_error(path + ": parameter block table mismatch");
    }
    for (auto& ref : refs) {
        std::size_t size = 0;
        if (!(in >> word >> size) || word != "block" || size != ref.values->size()) {
            throw std::runtime_error(path + ": parameter block size mismatch");
        }
        for (std::size_t i = 0; i < size; ++i) {
            if (!(in >> (*ref.values)[i])) {
                throw std::runtime_error(path + ": truncated parameter block");
            }
        }
    }
    return model;
}

}  // namespace fundus
