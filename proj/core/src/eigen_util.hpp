// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include "morphlab/tensor.hpp"

namespace morphlab {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

inline ConstMatMap as_mat(const Tensor& t, int rows, int cols) {
    return ConstMatMap(t.data(), rows, cols);
}

inline MatMap as_mat(Tensor& t, int rows, int cols) {
    return MatMap(t.data(), rows, cols);
}

}  // namespace morphlab
