// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "morphlab/tensor.hpp"

namespace morphlab {

// Fixed-dimension identity vector produced by an embedder.
struct IdentityEmbedding {
    Tensor values;          // rank-1, length = embedder dimension
    std::string source_id;  // optional identity label

    int dim() const { return values.empty() ? 0 : values.dim(0); }
};

class IdentityEmbedder {
public:
    virtual ~IdentityEmbedder() = default;

    // Deterministic: identical images produce identical embeddings.
    virtual IdentityEmbedding embed(const Tensor& image) const = 0;
    virtual int embedding_dim() const = 0;
    virtual std::string name() const = 0;
};

}  // namespace morphlab
