// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace morphlab {

// Dense float32 tensor, row-major, small rank. All numeric kernels in the
// project operate on the flat buffer; shape is carried for validation.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<float> data);

    static Tensor full(std::vector<int> shape, float value);
    static Tensor scalar(float value) { return Tensor({1}, {value}); }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    std::vector<float>& vec() { return data_; }
    const std::vector<float>& vec() const { return data_; }

    // Index into a {C,H,W} tensor.
    float& at(int c, int y, int x);
    float at(int c, int y, int x) const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;
    void fill(float value);
    Tensor reshaped(std::vector<int> new_shape) const;

    std::string shape_string() const;

private:
    std::vector<int> shape_;
    std::vector<float> data_;
};

// Elementwise helpers. Shape mismatches throw ParameterError.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// y += alpha * x
void axpy(double alpha, const Tensor& x, Tensor& y);
// a*x + b*y, elementwise
Tensor linear_combine(double a, const Tensor& x, double b, const Tensor& y);

// Reductions accumulate in double.
double dot(const Tensor& a, const Tensor& b);
double squared_norm(const Tensor& a);
double norm(const Tensor& a);
double mean(const Tensor& a);
double variance(const Tensor& a);
double mse(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);
double cosine_similarity(const Tensor& a, const Tensor& b);

void require_same_shape(const Tensor& a, const Tensor& b, const char* where);

}  // namespace morphlab
