// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include "morphlab/nn.hpp"

#include <cmath>

#include "eigen_util.hpp"
#include "morphlab/errors.hpp"

namespace morphlab {

ParamPtr ParamStore::create(const std::string& name, std::vector<int> shape) {
    if (find(name)) throw ParameterError("duplicate parameter name: " + name);
    auto p = std::make_shared<Param>();
    p->name = name;
    p->value = Tensor(std::move(shape));
    p->grad = Tensor(p->value.shape());
    params_.push_back(p);
    return p;
}

void ParamStore::zero_grads() {
    for (auto& p : params_) p->grad.fill(0.0f);
}

ParamPtr ParamStore::find(const std::string& name) const {
    for (const auto& p : params_) {
        if (p->name == name) return p;
    }
    return nullptr;
}

std::size_t ParamStore::total_size() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
}

double ParamStore::grad_norm() const {
    double acc = 0.0;
    for (const auto& p : params_) acc += squared_norm(p->grad);
    return std::sqrt(acc);
}

void ParamStore::clip_grad_norm(double max_norm) {
    const double n = grad_norm();
    if (n > max_norm && n > 0.0) {
        const float s = static_cast<float>(max_norm / n);
        for (auto& p : params_) {
            for (std::size_t i = 0; i < p->grad.size(); ++i) p->grad[i] *= s;
        }
    }
}

AdamOptimizer::AdamOptimizer(std::vector<ParamPtr> params, double lr, double beta1, double beta2,
                             double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
        m_.emplace_back(p->value.shape());
        v_.emplace_back(p->value.shape());
    }
}

void AdamOptimizer::step() {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        Param& p = *params_[k];
        Tensor& m = m_[k];
        Tensor& v = v_[k];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            m[i] = static_cast<float>(beta1_ * m[i] + (1.0 - beta1_) * g);
            v[i] = static_cast<float>(beta2_ * v[i] + (1.0 - beta2_) * g * g);
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p.value[i] -= static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + eps_));
        }
    }
}

Conv2d::Conv2d(ParamStore& store, const std::string& name, int in_ch, int out_ch, int ksize,
               int stride, Rng& init_rng)
    : in_ch_(in_ch), out_ch_(out_ch), ksize_(ksize), stride_(stride) {
    if (stride != 1 && stride != 2) throw ParameterError("Conv2d: stride must be 1 or 2");
    weight_ = store.create(name + ".weight", {out_ch, in_ch * ksize * ksize});
    bias_ = store.create(name + ".bias", {out_ch});
    const double s = std::sqrt(2.0 / (in_ch * ksize * ksize));
    for (std::size_t i = 0; i < weight_->value.size(); ++i) {
        weight_->value[i] = static_cast<float>(init_rng.gaussian() * s);
    }
}

namespace {

Tensor im2col(const Tensor& x, int ksize, int stride, int out_h, int out_w) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const int pad = ksize / 2;
    Tensor col({c * ksize * ksize, out_h * out_w});
    float* cd = col.data();
    const float* xd = x.data();
    int row = 0;
    for (int ci = 0; ci < c; ++ci) {
        for (int ky = 0; ky < ksize; ++ky) {
            for (int kx = 0; kx < ksize; ++kx, ++row) {
                float* dst = cd + static_cast<std::size_t>(row) * out_h * out_w;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= h) {
                        for (int ox = 0; ox < out_w; ++ox) dst[oy * out_w + ox] = 0.0f;
                        continue;
                    }
                    const float* src = xd + (static_cast<std::size_t>(ci) * h + iy) * w;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride + kx - pad;
                        dst[oy * out_w + ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0f;
                    }
                }
            }
        }
    }
    return col;
}

void col2im_add(const Tensor& col, int c, int h, int w, int ksize, int stride, int out_h,
                int out_w, Tensor& dx) {
    const int pad = ksize / 2;
    const float* cd = col.data();
    float* xd = dx.data();
    int row = 0;
    for (int ci = 0; ci < c; ++ci) {
        for (int ky = 0; ky < ksize; ++ky) {
            for (int kx = 0; kx < ksize; ++kx, ++row) {
                const float* src = cd + static_cast<std::size_t>(row) * out_h * out_w;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= h) continue;
                    float* dst = xd + (static_cast<std::size_t>(ci) * h + iy) * w;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride + kx - pad;
                        if (ix >= 0 && ix < w) dst[ix] += src[oy * out_w + ox];
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor Conv2d::forward(const Tensor& x, ConvCache* cache) const {
    if (x.rank() != 3 || x.dim(0) != in_ch_) {
        throw ParameterError("Conv2d: input must be [in_ch, H, W]");
    }
    const int h = x.dim(1), w = x.dim(2);
    const int pad = ksize_ / 2;
    const int out_h = (h + 2 * pad - ksize_) / stride_ + 1;
    const int out_w = (w + 2 * pad - ksize_) / stride_ + 1;

    Tensor col = im2col(x, ksize_, stride_, out_h, out_w);
    Tensor y({out_ch_, out_h, out_w});
    as_mat(y, out_ch_, out_h * out_w) =
        as_mat(weight_->value, out_ch_, in_ch_ * ksize_ * ksize_) *
        as_mat(col, in_ch_ * ksize_ * ksize_, out_h * out_w);
    float* yd = y.data();
    for (int co = 0; co < out_ch_; ++co) {
        const float b = bias_->value[static_cast<std::size_t>(co)];
        for (int i = 0; i < out_h * out_w; ++i) yd[static_cast<std::size_t>(co) * out_h * out_w + i] += b;
    }
    if (cache) {
        cache->input = x;
        cache->col = std::move(col);
    }
    return y;
}

Tensor Conv2d::backward(const ConvCache& cache, const Tensor& d_out) const {
    const Tensor& x = cache.input;
    const int h = x.dim(1), w = x.dim(2);
    const int out_h = d_out.dim(1), out_w = d_out.dim(2);
    const int krows = in_ch_ * ksize_ * ksize_;

    // dW += dY * col^T ; db += row sums ; dcol = W^T * dY ; dx = col2im(dcol)
    as_mat(weight_->grad, out_ch_, krows) +=
        as_mat(d_out, out_ch_, out_h * out_w) * as_mat(cache.col, krows, out_h * out_w).transpose();
    const float* dyd = d_out.data();
    for (int co = 0; co < out_ch_; ++co) {
        double acc = 0.0;
        for (int i = 0; i < out_h * out_w; ++i) acc += dyd[static_cast<std::size_t>(co) * out_h * out_w + i];
        bias_->grad[static_cast<std::size_t>(co)] += static_cast<float>(acc);
    }

    Tensor dcol({krows, out_h * out_w});
    as_mat(dcol, krows, out_h * out_w) =
        as_mat(weight_->value, out_ch_, krows).transpose() * as_mat(d_out, out_ch_, out_h * out_w);
    Tensor dx({in_ch_, h, w});
    col2im_add(dcol, in_ch_, h, w, ksize_, stride_, out_h, out_w, dx);
    return dx;
}

Linear::Linear(ParamStore& store, const std::string& name, int in_dim, int out_dim, Rng& init_rng)
    : in_dim_(in_dim), out_dim_(out_dim) {
    weight_ = store.create(name + ".weight", {in_dim, out_dim});
    bias_ = store.create(name + ".bias", {out_dim});
    const double s = std::sqrt(1.0 / in_dim);
    for (std::size_t i = 0; i < weight_->value.size(); ++i) {
        weight_->value[i] = static_cast<float>(init_rng.gaussian() * s);
    }
}

Tensor Linear::forward(const Tensor& x, LinearCache* cache) const {
    Tensor x2 = x.rank() == 1 ? x.reshaped({1, x.dim(0)}) : x;
    if (x2.rank() != 2 || x2.dim(1) != in_dim_) throw ParameterError("Linear: bad input shape");
    const int n = x2.dim(0);
    Tensor y({n, out_dim_});
    as_mat(y, n, out_dim_) = as_mat(x2, n, in_dim_) * as_mat(weight_->value, in_dim_, out_dim_);
    float* yd = y.data();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < out_dim_; ++j) yd[static_cast<std::size_t>(i) * out_dim_ + j] += bias_->value[static_cast<std::size_t>(j)];
    }
    if (cache) cache->input = x2;
    if (x.rank() == 1) return y.reshaped({out_dim_});
    return y;
}

Tensor Linear::backward(const LinearCache& cache, const Tensor& d_out) const {
    Tensor dy = d_out.rank() == 1 ? d_out.reshaped({1, d_out.dim(0)}) : d_out;
    const int n = cache.input.dim(0);
    as_mat(weight_->grad, in_dim_, out_dim_) +=
        as_mat(cache.input, n, in_dim_).transpose() * as_mat(dy, n, out_dim_);
    const float* dyd = dy.data();
    for (int j = 0; j < out_dim_; ++j) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += dyd[static_cast<std::size_t>(i) * out_dim_ + j];
        bias_->grad[static_cast<std::size_t>(j)] += static_cast<float>(acc);
    }
    Tensor dx({n, in_dim_});
    as_mat(dx, n, in_dim_) = as_mat(dy, n, out_dim_) * as_mat(weight_->value, in_dim_, out_dim_).transpose();
    if (d_out.rank() == 1) return dx.reshaped({in_dim_});
    return dx;
}

Tensor silu(const Tensor& x) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i];
        y[i] = static_cast<float>(v / (1.0 + std::exp(-v)));
    }
    return y;
}

Tensor silu_backward(const Tensor& x, const Tensor& d_out) {
    require_same_shape(x, d_out, "silu_backward");
    Tensor dx(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i];
        const double s = 1.0 / (1.0 + std::exp(-v));
        dx[i] = static_cast<float>(d_out[i] * (s * (1.0 + v * (1.0 - s))));
    }
    return dx;
}

Tensor upsample_nearest2(const Tensor& x) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor y({c, 2 * h, 2 * w});
    for (int ci = 0; ci < c; ++ci) {
        for (int yy = 0; yy < 2 * h; ++yy) {
            for (int xx = 0; xx < 2 * w; ++xx) {
                y.at(ci, yy, xx) = x.at(ci, yy / 2, xx / 2);
            }
        }
    }
    return y;
}

Tensor upsample_nearest2_backward(const Tensor& d_out) {
    const int c = d_out.dim(0), h2 = d_out.dim(1), w2 = d_out.dim(2);
    Tensor dx({c, h2 / 2, w2 / 2});
    for (int ci = 0; ci < c; ++ci) {
        for (int yy = 0; yy < h2; ++yy) {
            for (int xx = 0; xx < w2; ++xx) {
                dx.at(ci, yy / 2, xx / 2) += d_out.at(ci, yy, xx);
            }
        }
    }
    return dx;
}

Tensor sinusoidal_features(double t, int dim) {
    if (dim < 2 || dim % 2 != 0) throw ParameterError("sinusoidal_features: dim must be even");
    Tensor f({dim});
    const int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / half);
        f[static_cast<std::size_t>(2 * i)] = static_cast<float>(std::sin(t * freq));
        f[static_cast<std::size_t>(2 * i + 1)] = static_cast<float>(std::cos(t * freq));
    }
    return f;
}

double softmax_cross_entropy(const Tensor& logits, int target, Tensor& d_logits) {
    const int n = static_cast<int>(logits.size());
    if (target < 0 || target >= n) throw ParameterError("softmax_cross_entropy: bad target");
    double mx = logits[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, static_cast<double>(logits[static_cast<std::size_t>(i)]));
    double sum = 0.0;
    std::vector<double> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        p[static_cast<std::size_t>(i)] = std::exp(logits[static_cast<std::size_t>(i)] - mx);
        sum += p[static_cast<std::size_t>(i)];
    }
    d_logits = Tensor(logits.shape());
    for (int i = 0; i < n; ++i) {
        const double q = p[static_cast<std::size_t>(i)] / sum;
        d_logits[static_cast<std::size_t>(i)] = static_cast<float>(q - (i == target ? 1.0 : 0.0));
    }
    return -std::log(p[static_cast<std::size_t>(target)] / sum);
}

double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

double bce_with_logit(double logit, double target, double& d_logit) {
    const double p = sigmoid(logit);
    d_logit = p - target;
    const double eps = 1e-12;
    return -(target * std::log(p + eps) + (1.0 - target) * std::log(1.0 - p + eps));
}

}  // namespace morphlab
