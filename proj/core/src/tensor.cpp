// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include "morphlab/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "morphlab/errors.hpp"

namespace morphlab {

namespace {

std::size_t shape_product(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw ParameterError("tensor dimensions must be positive");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)), data_(shape_product(shape_), 0.0f) {}

Tensor::Tensor(std::vector<int> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size()) {
        throw ParameterError("tensor data size does not match shape");
    }
}

Tensor Tensor::full(std::vector<int> shape, float value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

float& Tensor::at(int c, int y, int x) {
    const int h = shape_[1], w = shape_[2];
    return data_[static_cast<std::size_t>((c * h + y) * w + x)];
}

float Tensor::at(int c, int y, int x) const {
    const int h = shape_[1], w = shape_[2];
    return data_[static_cast<std::size_t>((c * h + y) * w + x)];
}

bool Tensor::all_finite() const {
    for (float v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(float value) {
    std::fill(data_.begin(), data_.end(), value);
}

Tensor Tensor::reshaped(std::vector<int> new_shape) const {
    if (shape_product(new_shape) != data_.size()) {
        throw ParameterError("reshape size mismatch");
    }
    return Tensor(std::move(new_shape), data_);
}

std::string Tensor::shape_string() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << "x";
        os << shape_[i];
    }
    os << "]";
    return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
    if (!a.same_shape(b)) {
        throw ParameterError(std::string(where) + ": shape mismatch " + a.shape_string() + " vs " +
                             b.shape_string());
    }
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Tensor scale(const Tensor& a, double s) {
    Tensor out(a.shape());
    const float fs = static_cast<float>(s);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * fs;
    return out;
}

void axpy(double alpha, const Tensor& x, Tensor& y) {
    require_same_shape(x, y, "axpy");
    const float fa = static_cast<float>(alpha);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += fa * x[i];
}

Tensor linear_combine(double a, const Tensor& x, double b, const Tensor& y) {
    require_same_shape(x, y, "linear_combine");
    Tensor out(x.shape());
    const float fa = static_cast<float>(a);
    const float fb = static_cast<float>(b);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = fa * x[i] + fb * y[i];
    return out;
}

double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return acc;
}

double squared_norm(const Tensor& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * static_cast<double>(a[i]);
    return acc;
}

double norm(const Tensor& a) {
    return std::sqrt(squared_norm(a));
}

double mean(const Tensor& a) {
    if (a.empty()) throw ParameterError("mean of empty tensor");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i];
    return acc / static_cast<double>(a.size());
}

double variance(const Tensor& a) {
    const double m = mean(a);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - m;
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double mse(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mse");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    }
    return m;
}

double cosine_similarity(const Tensor& a, const Tensor& b) {
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) throw ParameterError("cosine_similarity: zero-norm input");
    return dot(a, b) / (na * nb);
}

}  // namespace morphlab
