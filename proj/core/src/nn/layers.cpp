#include "fundus/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fundus {

Tensor row_to_tensor(const double* row, int width, int height, int channels) {
    Tensor t({channels, height, width});
    const std::size_t plane = static_cast<std::size_t>(width) * height;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < channels; ++c) {
                t.data[static_cast<std::size_t>(c) * plane + static_cast<std::size_t>(y) * width + x] =
                    row[(static_cast<std::size_t>(y) * width + x) * channels + c];
            }
        }
    }
    return t;
}

void Layer::collect_values(std::vector<const std::vector<double>*>& out) const {
    auto& self = const_cast<Layer&>(*this);
    std::vector<ParamRef> refs;
    self.collect_params(refs);
    for (const auto& ref : refs) out.push_back(ref.values);
}

namespace {

class Conv2d final : public Layer {
public:
    Conv2d(int in_ch, int out_ch, int height, int width)
        : in_ch_(in_ch), out_ch_(out_ch), height_(height), width_(width),
          w_(static_cast<std::size_t>(out_ch) * in_ch * 9, 0.0),
          b_(static_cast<std::size_t>(out_ch), 0.0),
          gw_(w_.size(), 0.0), gb_(b_.size(), 0.0) {}

    void init_params(Rng& rng) override {
        const double limit = std::sqrt(6.0 / (static_cast<double>(in_ch_) * 9.0));
        for (auto& v : w_) v = rng.uniform(-limit, limit);
        std::fill(b_.begin(), b_.end(), 0.0);
    }

    void collect_params(std::vector<ParamRef>& out) override {
        out.push_back({&w_, &gw_, true});
        out.push_back({&b_, &gb_, false});
    }

    Tensor forward(const Tensor& x, Rng&) override {
        x_ = x;
        return run(x);
    }

    Tensor apply(const Tensor& x) const override { return run(x); }

    Tensor backward(const Tensor& dy) override {
        const std::size_t plane = static_cast<std::size_t>(height_) * width_;
        Tensor dx({in_ch_, height_, width_});
        for (int f = 0; f < out_ch_; ++f) {
            for (int y = 0; y < height_; ++y) {
                for (int x = 0; x < width_; ++x) {
                    const double g = dy.data[f * plane + static_cast<std::size_t>(y) * width_ + x];
                    gb_[f] += g;
                    for (int c = 0; c < in_ch_; ++c) {
                        const std::size_t base = (static_cast<std::size_t>(f) * in_ch_ + c) * 9;
                        for (int ky = 0; ky < 3; ++ky) {
                            const int sy = y + ky - 1;
                            if (sy < 0 || sy >= height_) continue;
                            for (int kx = 0; kx < 3; ++kx) {
                                const int sx = x + kx - 1;
                                if (sx < 0 || sx >= width_) continue;
                                const std::size_t at = c * plane +
                                    static_cast<std::size_t>(sy) * width_ + sx;
                                gw_[base + ky * 3 + kx] += g * x_.data[at];
                                dx.data[at] += g * w_[base + ky * 3 + kx];
                            }
                        }
                    }
                }
            }
        }
        return dx;
    }

private:
    Tensor run(const Tensor& x) const {
        const std::size_t plane = static_cast<std::size_t>(height_) * width_;
        Tensor out({out_ch_, height_, width_});
        for (int f = 0; f < out_ch_; ++f) {
            for (int y = 0; y < height_; ++y) {
                for (int xo = 0; xo < width_; ++xo) {
                    double acc = b_[f];
                    for (int c = 0; c < in_ch_; ++c) {
                        const std::size_t base = (static_cast<std::size_t>(f) * in_ch_ + c) * 9;
                        for (int ky = 0; ky < 3; ++ky) {
                            const int sy = y + ky - 1;
                            if (sy < 0 || sy >= height_) continue;
                            for (int kx = 0; kx < 3; ++kx) {
                                const int sx = xo + kx - 1;
                                if (sx < 0 || sx >= width_) continue;
                                acc += w_[base + ky * 3 + kx] *
                                       x.data[c * plane + static_cast<std::size_t>(sy) * width_ + sx];
                            }
                        }
                    }
                    out.data[f * plane + static_cast<std::size_t>(y) * width_ + xo] = acc;
                }
            }
        }
        return out;
    }

    int in_ch_, out_ch_, height_, width_;
    std::vector<double> w_, b_, gw_, gb_;
    Tensor x_;
};

class Relu final : public Layer {
public:
    Tensor forward(const Tensor& x, Rng&) override {
        x_ = x;
        return apply(x);
    }

    Tensor apply(const Tensor& x) const override {
        Tensor out = x;
        for (auto& v : out.data) v = std::max(v, 0.0);
        return out;
    }

    Tensor backward(const Tensor& dy) override {
        Tensor dx = dy;
        for (std::size_t i = 0; i < dx.data.size(); ++i) {
            if (x_.data[i] <= 0.0) dx.data[i] = 0.0;
        }
        return dx;
    }

private:
    Tensor x_;
};

class MaxPool2 final : public Layer {
public:
    MaxPool2(int channels, int height, int width)
        : channels_(channels), height_(height), width_(width) {}

    Tensor forward(const Tensor& x, Rng&) override {
        argmax_.assign(x.size() / 4, 0);
        return run(x, &argmax_);
    }

    Tensor apply(const Tensor& x) const override { return run(x, nullptr); }

    Tensor backward(const Tensor& dy) override {
        Tensor dx({channels_, height_, width_});
        for (std::size_t o = 0; o < dy.data.size(); ++o) {
            dx.data[argmax_[o]] += dy.data[o];
        }
        return dx;
    }

private:
    Tensor run(const Tensor& x, std::vector<std::size_t>* argmax) const {
        const int oh = height_ / 2, ow = width_ / 2;
        Tensor out({channels_, oh, ow});
        std::size_t o = 0;
        for (int c = 0; c < channels_; ++c) {
            const std::size_t plane = static_cast<std::size_t>(c) * height_ * width_;
            for (int y = 0; y < oh; ++y) {
                for (int xo = 0; xo < ow; ++xo, ++o) {
                    // Row-major scan of the 2x2 block; strict > keeps the
                    // first maximum on ties.
                    std::size_t best = plane + static_cast<std::size_t>(2 * y) * width_ + 2 * xo;
                    double best_v = x.data[best];
                    for (int dy2 = 0; dy2 < 2; ++dy2) {
                        for (int dx2 = 0; dx2 < 2; ++dx2) {
                            const std::size_t at = plane +
                                static_cast<std::size_t>(2 * y + dy2) * width_ + 2 * xo + dx2;
                            if (x.data[at] > best_v) {
                                best_v = x.data[at];
                                best = at;
                            }
                        }
                    }
                    out.data[o] = best_v;
                    if (argmax) (*argmax)[o] = best;
                }
            }
        }
        return out;
    }

    int channels_, height_, width_;
    std::vector<std::size_t> argmax_;
};

class Flatten final : public Layer {
public:
    explicit Flatten(std::vector<int> in_shape) : in_shape_(std::move(in_shape)) {}

    Tensor forward(const Tensor& x, Rng&) override { return apply(x); }

    Tensor apply(const Tensor& x) const override {
        Tensor out({static_cast<int>(x.size())});
        out.data = x.data;
        return out;
    }

    Tensor backward(const Tensor& dy) override {
        Tensor dx(in_shape_);
        dx.data = dy.data;
        return dx;
    }

private:
    std::vector<int> in_shape_;
};

class Dense final : public Layer {
public:
    Dense(int in_dim, int out_dim)
        : in_dim_(in_dim), out_dim_(out_dim),
          w_(static_cast<std::size_t>(out_dim) * in_dim, 0.0),
          b_(static_cast<std::size_t>(out_dim), 0.0),
          gw_(w_.size(), 0.0), gb_(b_.size(), 0.0) {}

    void init_params(Rng& rng) override {
        const double limit = std::sqrt(6.0 / static_cast<double>(in_dim_));
        for (auto& v : w_) v = rng.uniform(-limit, limit);
        std::fill(b_.begin(), b_.end(), 0.0);
    }

    void collect_params(std::vector<ParamRef>& out) override {
        out.push_back({&w_, &gw_, true});
        out.push_back({&b_, &gb_, false});
    }

    Tensor forward(const Tensor& x, Rng&) override {
        x_ = x;
        return apply(x);
    }

    Tensor apply(const Tensor& x) const override {
        Tensor out({out_dim_});
        for (int u = 0; u < out_dim_; ++u) {
            double acc = b_[u];
            const double* row = w_.data() + static_cast<std::size_t>(u) * in_dim_;
            for (int i = 0; i < in_dim_; ++i) acc += row[i] * x.data[i];
            out.data[u] = acc;
        }
        return out;
    }

    Tensor backward(const Tensor& dy) override {
        Tensor dx({in_dim_});
        for (int u = 0; u < out_dim_; ++u) {
            const double g = dy.data[u];
            gb_[u] += g;
            double* grow = gw_.data() + static_cast<std::size_t>(u) * in_dim_;
            const double* row = w_.data() + static_cast<std::size_t>(u) * in_dim_;
            for (int i = 0; i < in_dim_; ++i) {
                grow[i] += g * x_.data[i];
                dx.data[i] += g * row[i];
            }
        }
        return dx;
    }

private:
    int in_dim_, out_dim_;
    std::vector<double> w_, b_, gw_, gb_;
    Tensor x_;
};

class Dropout final : public Layer {
public:
    explicit Dropout(double rate) : rate_(rate), keep_scale_(1.0 / (1.0 - rate)) {}

    Tensor forward(const Tensor& x, Rng& rng) override {
        mask_.resize(x.size());
        Tensor out = x;
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            mask_[i] = rng.next_double() < rate_ ? 0.0 : keep_scale_;
            out.data[i] *= mask_[i];
        }
        return out;
    }

    Tensor apply(const Tensor& x) const override { return x; }

    Tensor backward(const Tensor& dy) override {
        Tensor dx = dy;
        for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= mask_[i];
        return dx;
    }

private:
    double rate_, keep_scale_;
    std::vector<double> mask_;
};

}  // namespace

NetworkConfig NetworkConfig::default_config(int width, int height, int channels,
                                            int num_classes) {
    NetworkConfig config;
    config.input_width = width;
    config.input_height = height;
    config.input_channels = channels;
    config.layers = {
        {LayerKind::conv, 8, 0.0},    {LayerKind::relu, 0, 0.0},
        {LayerKind::maxpool, 0, 0.0}, {LayerKind::conv, 16, 0.0},
        {LayerKind::relu, 0, 0.0},    {LayerKind::maxpool, 0, 0.0},
        {LayerKind::flatten, 0, 0.0}, {LayerKind::dense, 64, 0.0},
        {LayerKind::relu, 0, 0.0},    {LayerKind::dropout, 0, 0.5},
        {LayerKind::dense, num_classes, 0.0}, {LayerKind::softmax, num_classes, 0.0},
    };
    return config;
}

void NetworkConfig::validate() const {
    if (input_width < 1 || input_height < 1 || input_channels < 1) {
        throw std::invalid_argument("network: input dimensions must be >= 1");
    }
    if (layers.empty() || layers.back().kind != LayerKind::softmax) {
        throw std::invalid_argument("network: final layer spec must be softmax");
    }

    int c = input_channels, h = input_height, w = input_width;
    bool flat = false;
    std::size_t dim = 0;
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
        const LayerSpec& spec = layers[i];
        switch (spec.kind) {
            case LayerKind::conv:
                if (flat) throw std::invalid_argument("network: conv after flatten");
                if (spec.units < 1) throw std::invalid_argument("network: conv needs filters");
                c = spec.units;
                break;
            case LayerKind::relu:
                break;
            case LayerKind::maxpool:
                if (flat) throw std::invalid_argument("network: maxpool after flatten");
                if (h % 2 != 0 || w % 2 != 0 || h < 2 || w < 2) {
                    throw std::invalid_argument(
                        "network: maxpool needs even spatial dims, got " + std::to_string(h) +
                        "x" + std::to_string(w));
                }
                h /= 2;
                w /= 2;
                break;
            case LayerKind::flatten:
                if (flat) throw std::invalid_argument("network: duplicate flatten");
                flat = true;
                dim = static_cast<std::size_t>(c) * h * w;
                break;
            case LayerKind::dense:
                if (!flat) throw std::invalid_argument("network: dense before flatten");
                if (spec.units < 1) throw std::invalid_argument("network: dense needs units");
                dim = static_cast<std::size_t>(spec.units);
                break;
            case LayerKind::dropout:
                if (!(spec.rate >= 0.0 && spec.rate < 1.0)) {
                    throw std::invalid_argument("network: dropout rate must be in [0,1)");
                }
                break;
            case LayerKind::softmax:
                throw std::invalid_argument("network: softmax must be the final spec");
        }
    }

    const LayerSpec& head = layers.back();
    if (head.units < 2) throw std::invalid_argument("network: softmax needs >= 2 classes");
    if (!flat) throw std::invalid_argument("network: flatten required before softmax");
    if (dim != static_cast<std::size_t>(head.units)) {
        throw std::invalid_argument("network: softmax width " + std::to_string(head.units) +
                                    " does not match incoming dimension " +
                                    std::to_string(dim));
    }
}

int NetworkConfig::num_classes() const {
    return layers.empty() ? 0 : layers.back().units;
}

std::vector<std::unique_ptr<Layer>> build_layers(const NetworkConfig& config) {
    config.validate();
    std::vector<std::unique_ptr<Layer>> out;
    int c = config.input_channels, h = config.input_height, w = config.input_width;
    std::size_t dim = 0;
    for (std::size_t i = 0; i + 1 < config.layers.size(); ++i) {
        const LayerSpec& spec = config.layers[i];
        switch (spec.kind) {
            case LayerKind::conv:
                out.push_back(std::make_unique<Conv2d>(c, spec.units, h, w));
                c = spec.units;
                break;
            case LayerKind::relu:
                out.push_back(std::make_unique<Relu>());
                break;
            case LayerKind::maxpool:
                out.push_back(std::make_unique<MaxPool2>(c, h, w));
                h /= 2;
                w /= 2;
                break;
            case LayerKind::flatten:
                out.push_back(std::make_unique<Flatten>(std::vector<int>{c, h, w}));
                dim = static_cast<std::size_t>(c) * h * w;
                break;
            case LayerKind::dense:
                out.push_back(std::make_unique<Dense>(static_cast<int>(dim), spec.units));
                dim = static_cast<std::size_t>(spec.units);
                break;
            case LayerKind::dropout:
                out.push_back(std::make_unique<Dropout>(spec.rate));
                break;
            case LayerKind::softmax:
                break;
        }
    }
    return out;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

LossGrad softmax_cross_entropy(const std::vector<double>& logits, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
        throw std::invalid_argument("softmax_cross_entropy: label out of range");
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (const double l : logits) sum += std::exp(l - m);

    LossGrad out;
    // log-domain evaluation keeps the loss finite even for extreme logits
    out.loss = -(logits[static_cast<std::size_t>(label)] - m - std::log(sum));
    out.dlogits.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out.dlogits[i] = std::exp(logits[i] - m) / sum;
    }
    out.dlogits[static_cast<std::size_t>(label)] -= 1.0;
    return out;
}

}  // namespace fundus
