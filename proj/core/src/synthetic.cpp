// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include "morphlab/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "morphlab/errors.hpp"
#include "morphlab/rng.hpp"

namespace morphlab {

std::string SyntheticIdentity::id_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "id%03d", label);
    return buf;
}

const SyntheticIdentity& ToyDataset::identity(int label) const {
    for (const auto& ident : identities) {
        if (ident.label == label) return ident;
    }
    throw DataError("unknown identity label");
}

std::vector<int> ToyDataset::image_indices_of(int label) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].identity_label == label) out.push_back(static_cast<int>(i));
    }
    return out;
}

namespace {

std::vector<int> labels_with_split(const ToyDataset& ds, const std::string& split) {
    std::vector<int> out;
    for (const auto& ident : ds.identities) {
        for (const auto& img : ds.images) {
            if (img.identity_label == ident.label) {
                if (img.split == split) out.push_back(ident.label);
                break;
            }
        }
    }
    return out;
}

std::vector<int> image_indices_with_split(const ToyDataset& ds, const std::string& split) {
    std::vector<int> out;
    for (std::size_t i = 0; i < ds.images.size(); ++i) {
        if (ds.images[i].split == split) out.push_back(static_cast<int>(i));
    }
    return out;
}

}  // namespace

std::vector<int> ToyDataset::train_labels() const { return labels_with_split(*this, "train"); }
std::vector<int> ToyDataset::eval_labels() const { return labels_with_split(*this, "eval"); }
std::vector<int> ToyDataset::train_image_indices() const { return image_indices_with_split(*this, "train"); }
std::vector<int> ToyDataset::eval_image_indices() const { return image_indices_with_split(*this, "eval"); }

namespace {

float lerp_range(float p, float lo, float hi) { return lo + (hi - lo) * p; }

// C1-continuous mask edge: 1 well inside (d < -aa/2), 0 outside.
float soft_edge(float d, float aa) {
    const float e = std::clamp(0.5f - d / aa, 0.0f, 1.0f);
    return e * e * (3.0f - 2.0f * e);
}

float mix(float a, float b, float m) { return a + (b - a) * m; }

}  // namespace

std::string group_of_params(const std::vector<float>& id_params) {
    const std::string width = id_params[0] > 0.5f ? "wide" : "narrow";
    const std::string tone = id_params[2] > 0.5f ? "light" : "dark";
    return width + "_" + tone;
}

Tensor render_face(const std::vector<float>& id_params, const SampleJitter& jitter, int size) {
    if (static_cast<int>(id_params.size()) != kIdParamCount) {
        throw ParameterError("render_face: expected 12 identity parameters");
    }
    for (float p : id_params) {
        if (!(p >= 0.0f && p <= 1.0f)) throw ParameterError("render_face: id_params must be in [0, 1]");
    }

    const float face_w = lerp_range(id_params[0], 0.55f, 0.88f);
    const float face_h = lerp_range(id_params[1], 0.68f, 0.96f);
    const float skin = lerp_range(id_params[2], 0.45f, 0.88f);
    const float eye_y = lerp_range(id_params[3], -0.46f, -0.16f);
    const float eye_dx = lerp_range(id_params[4], 0.18f, 0.40f);
    const float eye_r = lerp_range(id_params[5], 0.07f, 0.15f);
    const float eye_tone = lerp_range(id_params[6], 0.02f, 0.28f);
    const float mouth_y = lerp_range(id_params[7], 0.28f, 0.56f);
    const float mouth_w = lerp_range(id_params[8], 0.16f, 0.38f);
    const float smile = lerp_range(id_params[9], -0.22f, 0.22f) + jitter.smile_delta;
    const float tex_freq = lerp_range(id_params[10], 2.0f, 6.5f);
    const float tex_amp = lerp_range(id_params[11], 0.0f, 0.07f);

    const float bg = 0.12f + jitter.brightness;
    const float aa = 3.2f / static_cast<float>(size);
    const float mouth_tone = 0.10f;
    const float mouth_thick = 0.045f;

    Tensor img({1, size, size});
    for (int py = 0; py < size; ++py) {
        for (int px = 0; px < size; ++px) {
            const float u = (2.0f * (px + 0.5f) / size - 1.0f - jitter.dx) / jitter.scale;
            const float v = (2.0f * (py + 0.5f) / size - 1.0f - jitter.dy) / jitter.scale;

            // face ellipse
            const float re = std::sqrt((u / face_w) * (u / face_w) + (v / face_h) * (v / face_h));
            const float face_mask = soft_edge(re - 1.0f, aa / std::min(face_w, face_h));

            float tone = skin + tex_amp * std::sin(tex_freq * (u + 0.7f * v) + tex_freq);

            // eyes
            for (float sign : {-1.0f, 1.0f}) {
                const float ex = u - sign * eye_dx;
                const float ey = v - eye_y;
                const float de = std::sqrt(ex * ex + ey * ey) - eye_r;
                tone = mix(tone, eye_tone, soft_edge(de, aa));
            }

            // mouth: curved bar around y = mouth_y + smile * ((x/w)^2 - 0.5)
            {
                const float xn = u / mouth_w;
                const float curve = mouth_y + smile * (xn * xn - 0.5f);
                const float dmy = std::abs(v - curve) - mouth_thick;
                const float horiz = soft_edge(std::abs(xn) - 1.0f, aa / mouth_w);
                tone = mix(tone, mouth_tone, soft_edge(dmy, aa) * horiz);
            }

            const float value = std::clamp(mix(bg, tone, face_mask) + jitter.brightness * 0.5f,
                                           0.0f, 1.0f);
            img.at(0, py, px) = 2.0f * value - 1.0f;
        }
    }
    return img;
}

ToyDataset generate_dataset(const DatasetConfig& config) {
    if (config.n_identities < 2) throw ParameterError("generate_dataset: need >= 2 identities");
    if (config.samples_per_identity < 1) throw ParameterError("generate_dataset: need >= 1 sample");
    if (config.image_size < 8) throw ParameterError("generate_dataset: image_size too small");
    if (!(config.eval_fraction >= 0.0 && config.eval_fraction < 1.0)) {
        throw ParameterError("generate_dataset: eval_fraction must be in [0, 1)");
    }

    ToyDataset ds;
    ds.config = config;

    const int n_eval = static_cast<int>(std::lround(config.eval_fraction * config.n_identities));
    const int n_train = config.n_identities - n_eval;

    const float js = static_cast<float>(config.jitter_strength);
    for (int label = 0; label < config.n_identities; ++label) {
        Rng id_rng(hash_combine(config.seed, hash_combine(0x1d, static_cast<std::uint64_t>(label))));
        SyntheticIdentity ident;
        ident.label = label;
        ident.id_params.resize(kIdParamCount);
        for (int k = 0; k < kIdParamCount; ++k) {
            ident.id_params[static_cast<std::size_t>(k)] = static_cast<float>(id_rng.uniform());
        }
        // stratify the two group attributes (face width, tone) so the four
        // attribute groups stay balanced
        const int quadrant = label % 4;
        auto into_half = [](float p, bool upper) {
            return upper ? 0.5f + 0.5f * p * 0.999f : 0.5f * p * 0.999f;
        };
        ident.id_params[0] = into_half(ident.id_params[0], quadrant % 2 == 1);
        ident.id_params[2] = into_half(ident.id_params[2], quadrant / 2 == 1);
        ident.group = group_of_params(ident.id_params);
        ds.identities.push_back(ident);

        const std::string split = label < n_train ? "train" : "eval";
        for (int s = 0; s < config.samples_per_identity; ++s) {
            Rng jit_rng(hash_combine(config.seed,
                                     hash_combine(0x2e, hash_combine(static_cast<std::uint64_t>(label),
                                                                     static_cast<std::uint64_t>(s)))));
            SampleJitter jitter;
            jitter.dx = static_cast<float>(jit_rng.uniform(-0.06, 0.06)) * js;
            jitter.dy = static_cast<float>(jit_rng.uniform(-0.06, 0.06)) * js;
            jitter.scale = 1.0f + static_cast<float>(jit_rng.uniform(-0.05, 0.05)) * js;
            jitter.smile_delta = static_cast<float>(jit_rng.uniform(-0.06, 0.06)) * js;
            jitter.brightness = static_cast<float>(jit_rng.uniform(-0.04, 0.04)) * js;

            ToyImage img;
            img.pixels = render_face(ident.id_params, jitter, config.image_size);
            img.identity_label = label;
            img.sample_index = s;
            img.split = split;
            char buf[32];
            std::snprintf(buf, sizeof(buf), "id%03d_s%02d", label, s);
            img.image_id = buf;
            ds.images.push_back(std::move(img));
        }
    }
    return ds;
}

}  // namespace morphlab
