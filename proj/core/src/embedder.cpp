// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include "morphlab/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "conv_stack.hpp"
#include "morphlab/errors.hpp"

namespace morphlab {

struct ToyEmbedder::Impl {
    std::unique_ptr<ConvStack> trunk;
    std::unique_ptr<Linear> fc_embed;
    std::unique_ptr<Linear> fc_cls;
};

struct ToyEmbedder::TrainCache {
    ConvStack::Cache trunk;
    LinearCache embed_in;
    Tensor embed_pre;
    LinearCache cls_in;
    Tensor d_logits;
};

ToyEmbedder::ToyEmbedder(const EmbedderConfig& config) : config_(config) {
    if (config.width < 1 || config.embed_dim < 1) throw ParameterError("ToyEmbedder: bad config");
    if (config.image_size % 8 != 0) throw ParameterError("ToyEmbedder: image_size must divide by 8");
    Rng rng(config.init_seed);
    impl_ = std::make_unique<Impl>();
    impl_->trunk = std::make_unique<ConvStack>(params_, "trunk", config.image_channels,
                                               config.width, rng);
    const int feat = ConvStack::out_dim(config.width, config.image_size);
    impl_->fc_embed = std::make_unique<Linear>(params_, "fc_embed", feat, config.embed_dim, rng);
    const int n_cls = std::max(config.n_classes, 2);
    impl_->fc_cls = std::make_unique<Linear>(params_, "fc_cls", config.embed_dim, n_cls, rng);
}

ToyEmbedder::~ToyEmbedder() = default;

Tensor ToyEmbedder::penultimate(const Tensor& image, TrainCache* cache) const {
    if (image.rank() != 3 || image.dim(0) != config_.image_channels ||
        image.dim(1) != config_.image_size || image.dim(2) != config_.image_size) {
        throw ParameterError("ToyEmbedder: image shape mismatch");
    }
    Tensor flat = impl_->trunk->forward(image, cache ? &cache->trunk : nullptr);
    Tensor pre = impl_->fc_embed->forward(flat, cache ? &cache->embed_in : nullptr);
    if (cache) cache->embed_pre = pre;
    return silu(pre);
}

IdentityEmbedding ToyEmbedder::embed(const Tensor& image) const {
    Tensor e = penultimate(image, nullptr);
    const double n = norm(e);
    if (n > 0.0) {
        const float inv = static_cast<float>(1.0 / n);
        for (std::size_t i = 0; i < e.size(); ++i) e[i] *= inv;
    }
    IdentityEmbedding out;
    out.values = std::move(e);
    return out;
}

Tensor ToyEmbedder::class_logits(const Tensor& image) const {
    return impl_->fc_cls->forward(penultimate(image, nullptr), nullptr);
}

double ToyEmbedder::train_example(const Tensor& image, int target, TrainCache& cache) const {
    Tensor emb = penultimate(image, &cache);
    Tensor logits = impl_->fc_cls->forward(emb, &cache.cls_in);
    return softmax_cross_entropy(logits, target, cache.d_logits);
}

void ToyEmbedder::backward(const TrainCache& cache) const {
    Tensor d_emb = impl_->fc_cls->backward(cache.cls_in, cache.d_logits);
    Tensor d_pre = silu_backward(cache.embed_pre, d_emb);
    Tensor d_flat = impl_->fc_embed->backward(cache.embed_in, d_pre);
    impl_->trunk->backward(cache.trunk, d_flat);
}

std::unique_ptr<ToyEmbedder> train_embedder(const ToyDataset& dataset, EmbedderConfig config,
                                            const EmbedderTrainConfig& train_config,
                                            EmbedderTrainResult* result) {
    const std::vector<int> train_labels = dataset.train_labels();
    if (train_labels.size() < 2) throw TrainingError("train_embedder: need >= 2 train identities");
    config.n_classes = static_cast<int>(train_labels.size());
    config.image_size = dataset.config.image_size;

    // contiguous class index per identity label
    std::vector<int> label_to_class(static_cast<std::size_t>(dataset.config.n_identities), -1);
    for (std::size_t i = 0; i < train_labels.size(); ++i) {
        label_to_class[static_cast<std::size_t>(train_labels[i])] = static_cast<int>(i);
    }

    // last sample of each training identity is held out for validation
    std::vector<int> train_items, holdout_items;
    for (int idx : dataset.train_image_indices()) {
        const ToyImage& img = dataset.images[static_cast<std::size_t>(idx)];
        if (img.sample_index == dataset.config.samples_per_identity - 1 &&
            dataset.config.samples_per_identity > 1) {
            holdout_items.push_back(idx);
        } else {
            train_items.push_back(idx);
        }
    }

    auto model = std::make_unique<ToyEmbedder>(config);
    Rng rng(train_config.seed);
    AdamOptimizer opt(model->params().all(), train_config.lr);

    EmbedderTrainResult stats;
    for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
        std::vector<int> order = rng.permutation(static_cast<int>(train_items.size()));
        double epoch_loss = 0.0;
        int batch_fill = 0;
        model->params().zero_grads();
        for (std::size_t oi = 0; oi < order.size(); ++oi) {
            const ToyImage& img =
                dataset.images[static_cast<std::size_t>(train_items[static_cast<std::size_t>(order[oi])])];
            const int target = label_to_class[static_cast<std::size_t>(img.identity_label)];
            ToyEmbedder::TrainCache cache;
            const double loss = model->train_example(img.pixels, target, cache);
            if (!std::isfinite(loss)) throw TrainingError("train_embedder: loss diverged");
            epoch_loss += loss;
            model->backward(cache);
            if (++batch_fill == train_config.batch_size || oi + 1 == order.size()) {
                model->params().clip_grad_norm(train_config.grad_clip);
                opt.step();
                model->params().zero_grads();
                batch_fill = 0;
            }
        }
        stats.epoch_losses.push_back(static_cast<float>(epoch_loss / static_cast<double>(order.size())));
    }

    int correct = 0;
    for (int idx : holdout_items) {
        const ToyImage& img = dataset.images[static_cast<std::size_t>(idx)];
        Tensor logits = model->class_logits(img.pixels);
        int best = 0;
        for (int i = 1; i < static_cast<int>(logits.size()); ++i) {
            if (logits[static_cast<std::size_t>(i)] > logits[static_cast<std::size_t>(best)]) best = i;
        }
        if (best == label_to_class[static_cast<std::size_t>(img.identity_label)]) ++correct;
    }
    stats.holdout_accuracy =
        holdout_items.empty() ? 0.0 : static_cast<double>(correct) / holdout_items.size();
    if (result) *result = stats;
    return model;
}

IdentityEmbedding oracle_embedding(const SyntheticIdentity& identity) {
    IdentityEmbedding e;
    e.values = Tensor({static_cast<int>(identity.id_params.size())}, identity.id_params);
    e.source_id = identity.id_string();
    return e;
}

void write_embeddings_tsv(const std::string& path, const std::vector<IdentityEmbedding>& embeddings) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "# identity\tvector entries\n";
    for (const auto& e : embeddings) {
        out << e.source_id;
        for (std::size_t i = 0; i < e.values.size(); ++i) {
            char buf[24];
            std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(e.values[i]));
            out << '\t' << buf;
        }
        out << '\n';
    }
}

std::vector<IdentityEmbedding> read_embeddings_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::vector<IdentityEmbedding> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string id;
        if (!std::getline(ss, id, '\t')) continue;
        std::vector<float> vals;
        std::string tok;
        while (std::getline(ss, tok, '\t')) vals.push_back(std::stof(tok));
        if (vals.empty()) throw IoError("embedding record without values in " + path);
        const int dim = static_cast<int>(vals.size());
        IdentityEmbedding e;
        e.values = Tensor({dim}, std::move(vals));
        e.source_id = id;
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace morphlab
