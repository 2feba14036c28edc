// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>

#include "morphlab/nn.hpp"

namespace morphlab {

// Three stride-2 conv + SiLU stages followed by flatten; the shared trunk of
// the small classifier models.
struct ConvStack {
    ConvStack(ParamStore& store, const std::string& name, int in_ch, int width, Rng& rng) {
        conv1 = std::make_unique<Conv2d>(store, name + ".conv1", in_ch, width, 3, 2, rng);
        conv2 = std::make_unique<Conv2d>(store, name + ".conv2", width, 2 * width, 3, 2, rng);
        conv3 = std::make_unique<Conv2d>(store, name + ".conv3", 2 * width, 4 * width, 3, 2, rng);
    }

    struct Cache {
        ConvCache c1, c2, c3;
        Tensor p1, p2, p3;  // pre-activations
    };

    static int out_dim(int width, int image_size) {
        const int s = image_size / 8;
        return 4 * width * s * s;
    }

    Tensor forward(const Tensor& x, Cache* cache) const {
        Tensor h1 = conv1->forward(x, cache ? &cache->c1 : nullptr);
        if (cache) cache->p1 = h1;
        h1 = silu(h1);
        Tensor h2 = conv2->forward(h1, cache ? &cache->c2 : nullptr);
        if (cache) cache->p2 = h2;
        h2 = silu(h2);
        Tensor h3 = conv3->forward(h2, cache ? &cache->c3 : nullptr);
        if (cache) cache->p3 = h3;
        h3 = silu(h3);
        return h3.reshaped({static_cast<int>(h3.size())});
    }

    // d_flat has the flattened feature shape.
    Tensor backward(const Cache& cache, const Tensor& d_flat) const {
        Tensor d3 = d_flat.reshaped(cache.p3.shape());
        d3 = silu_backward(cache.p3, d3);
        Tensor d2 = conv3->backward(cache.c3, d3);
        d2 = silu_backward(cache.p2, d2);
        Tensor d1 = conv2->backward(cache.c2, d2);
        d1 = silu_backward(cache.p1, d1);
        return conv1->backward(cache.c1, d1);
    }

    std::unique_ptr<Conv2d> conv1, conv2, conv3;
};

}  // namespace morphlab
