// Copyright (C) 2026 The morphlab authors
// SPDX-License-Identifier: Apache-2.0

#include "morphlab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "morphlab/errors.hpp"

namespace morphlab {

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw IoError("unexpected end of file");
    return v;
}

void write_string(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
    const std::uint32_t n = read_u32(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw IoError("unexpected end of file");
    return s;
}

void write_tensor_entry(std::ostream& os, const std::string& name, const Tensor& t) {
    write_string(os, name);
    write_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (int i = 0; i < t.rank(); ++i) write_u32(os, static_cast<std::uint32_t>(t.dim(i)));
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size() * sizeof(float)));
}

std::pair<std::string, Tensor> read_tensor_entry(std::istream& is) {
    std::string name = read_string(is);
    const std::uint32_t rank = read_u32(is);
    std::vector<int> shape(rank);
    for (std::uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int>(read_u32(is));
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(float)));
    if (!is) throw IoError("unexpected end of file reading tensor " + name);
    return {std::move(name), std::move(t)};
}

constexpr char kTensorMagic[5] = "MLTC";
constexpr char kCheckpointMagic[5] = "MLCK";

}  // namespace

void write_pgm(const std::string& path, const Tensor& image) {
    if (image.rank() != 3 || image.dim(0) != 1) throw ParameterError("write_pgm: expected [1,H,W]");
    const int h = image.dim(1), w = image.dim(2);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path);
    os << "P5\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> bytes(static_cast<std::size_t>(h) * w);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const double v01 = (static_cast<double>(image[i]) + 1.0) / 2.0;
        const long q = std::lround(std::clamp(v01, 0.0, 1.0) * 255.0);
        bytes[i] = static_cast<unsigned char>(q);
    }
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("failed writing " + path);
}

Tensor read_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path);
    std::string magic;
    is >> magic;
    if (magic != "P5") throw IoError("not a binary PGM: " + path);
    int w = 0, h = 0, maxval = 0;
    is >> w >> h >> maxval;
    if (w <= 0 || h <= 0 || maxval != 255) throw IoError("unsupported PGM header: " + path);
    is.get();  // single whitespace after header
    std::vector<unsigned char> bytes(static_cast<std::size_t>(h) * w);
    is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!is) throw IoError("truncated PGM: " + path);
    Tensor image({1, h, w});
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        image[i] = static_cast<float>(2.0 * (bytes[i] / 255.0) - 1.0);
    }
    return image;
}

void write_tensor_container(const std::string& path, const std::map<std::string, Tensor>& tensors) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path);
    os.write(kTensorMagic, 4);
    write_u32(os, 1);
    write_u32(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) write_tensor_entry(os, name, t);
    if (!os) throw IoError("failed writing " + path);
}

std::map<std::string, Tensor> read_tensor_container(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != kTensorMagic) throw IoError("bad tensor container " + path);
    if (read_u32(is) != 1) throw IoError("unsupported container version");
    const std::uint32_t count = read_u32(is);
    std::map<std::string, Tensor> out;
    for (std::uint32_t i = 0; i < count; ++i) out.insert(read_tensor_entry(is));
    return out;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path);
    os.write(kCheckpointMagic, 4);
    write_u32(os, 1);
    write_string(os, ckpt.kind);
    write_string(os, ckpt.config_json);
    write_u32(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) write_tensor_entry(os, name, t);
    if (!os) throw IoError("failed writing " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != kCheckpointMagic) throw IoError("bad checkpoint " + path);
    if (read_u32(is) != 1) throw IoError("unsupported checkpoint version");
    Checkpoint ckpt;
    ckpt.kind = read_string(is);
    ckpt.config_json = read_string(is);
    const std::uint32_t count = read_u32(is);
    for (std::uint32_t i = 0; i < count; ++i) ckpt.tensors.insert(read_tensor_entry(is));
    return ckpt;
}

Checkpoint checkpoint_from_params(const std::string& kind, const std::string& config_json,
                                  const ParamStore& params) {
    Checkpoint ckpt;
    ckpt.kind = kind;
    ckpt.config_json = config_json;
    for (const auto& p : params.all()) ckpt.tensors[p->name] = p->value;
    return ckpt;
}

void load_params_from_checkpoint(ParamStore& params, const Checkpoint& ckpt) {
    for (const auto& p : params.all()) {
        auto it = ckpt.tensors.find(p->name);
        if (it == ckpt.tensors.end()) throw IoError("checkpoint missing parameter " + p->name);
        if (!it->second.same_shape(p->value)) {
            throw IoError("checkpoint parameter shape mismatch for " + p->name);
        }
        p->value = it->second;
    }
    if (params.all().size() != ckpt.tensors.size()) {
        throw IoError("checkpoint parameter count mismatch");
    }
}

namespace {

nlohmann::json denoiser_config_json(const DenoiserConfig& c) {
    nlohmann::json j;
    j["latent_channels"] = c.latent_channels;
    j["latent_size"] = c.latent_size;
    j["base_channels"] = c.base_channels;
    j["num_down"] = c.num_down;
    j["cond_dim"] = c.cond_dim;
    j["time_dim"] = c.time_dim;
    j["attention_heads"] = c.attention_heads;
    j["init_seed"] = c.init_seed;
    return j;
}

DenoiserConfig denoiser_config_from_json(const nlohmann::json& j) {
    DenoiserConfig c;
    c.latent_channels = j.at("latent_channels").get<int>();
    c.latent_size = j.at("latent_size").get<int>();
    c.base_channels = j.at("base_channels").get<int>();
    c.num_down = j.at("num_down").get<int>();
    c.cond_dim = j.at("cond_dim").get<int>();
    c.time_dim = j.at("time_dim").get<int>();
    c.attention_heads = j.at("attention_heads").get<int>();
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
    return c;
}

nlohmann::json embedder_config_json(const EmbedderConfig& c) {
    nlohmann::json j;
    j["name"] = c.name;
    j["width"] = c.width;
    j["embed_dim"] = c.embed_dim;
    j["image_channels"] = c.image_channels;
    j["image_size"] = c.image_size;
    j["n_classes"] = c.n_classes;
    j["init_seed"] = c.init_seed;
    return j;
}

EmbedderConfig embedder_config_from_json(const nlohmann::json& j) {
    EmbedderConfig c;
    c.name = j.at("name").get<std::string>();
    c.width = j.at("width").get<int>();
    c.embed_dim = j.at("embed_dim").get<int>();
    c.image_channels = j.at("image_channels").get<int>();
    c.image_size = j.at("image_size").get<int>();
    c.n_classes = j.at("n_classes").get<int>();
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
    return c;
}

nlohmann::json mad_config_json(const MadConfig& c) {
    nlohmann::json j;
    j["name"] = c.name;
    j["width"] = c.width;
    j["image_channels"] = c.image_channels;
    j["image_size"] = c.image_size;
    j["init_seed"] = c.init_seed;
    return j;
}

MadConfig mad_config_from_json(const nlohmann::json& j) {
    MadConfig c;
    c.name = j.at("name").get<std::string>();
    c.width = j.at("width").get<int>();
    c.image_channels = j.at("image_channels").get<int>();
    c.image_size = j.at("image_size").get<int>();
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
    return c;
}

nlohmann::json autoencoder_config_json(const AutoencoderConfig& c) {
    nlohmann::json j;
    j["image_channels"] = c.image_channels;
    j["image_size"] = c.image_size;
    j["latent_channels"] = c.latent_channels;
    j["hidden_channels"] = c.hidden_channels;
    j["init_seed"] = c.init_seed;
    return j;
}

AutoencoderConfig autoencoder_config_from_json(const nlohmann::json& j) {
    AutoencoderConfig c;
    c.image_channels = j.at("image_channels").get<int>();
    c.image_size = j.at("image_size").get<int>();
    c.latent_channels = j.at("latent_channels").get<int>();
    c.hidden_channels = j.at("hidden_channels").get<int>();
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
    return c;
}

}  // namespace

void save_denoiser(const std::string& path, const DenoiserModel& model) {
    write_checkpoint(path, checkpoint_from_params("denoiser",
                                                  denoiser_config_json(model.config()).dump(),
                                                  model.params()));
}

std::unique_ptr<DenoiserModel> load_denoiser(const std::string& path) {
    Checkpoint ckpt = read_checkpoint(path);
    if (ckpt.kind != "denoiser") throw IoError("checkpoint kind mismatch: " + ckpt.kind);
    auto model = std::make_unique<DenoiserModel>(
        denoiser_config_from_json(nlohmann::json::parse(ckpt.config_json)));
    load_params_from_checkpoint(model->params(), ckpt);
    return model;
}

void save_embedder(const std::string& path, const ToyEmbedder& model) {
    write_checkpoint(path, checkpoint_from_params("embedder",
                                                  embedder_config_json(model.config()).dump(),
                                                  model.params()));
}

std::unique_ptr<ToyEmbedder> load_embedder(const std::string& path) {
    Checkpoint ckpt = read_checkpoint(path);
    if (ckpt.kind != "embedder") throw IoError("checkpoint kind mismatch: " + ckpt.kind);
    auto model = std::make_unique<ToyEmbedder>(
        embedder_config_from_json(nlohmann::json::parse(ckpt.config_json)));
    load_params_from_checkpoint(model->params(), ckpt);
    return model;
}

void save_mad(const std::string& path, const MadDetector& model) {
    write_checkpoint(path,
                     checkpoint_from_params("mad", mad_config_json(model.config()).dump(),
                                            model.params()));
}

std::unique_ptr<MadDetector> load_mad(const std::string& path) {
    Checkpoint ckpt = read_checkpoint(path);
    if (ckpt.kind != "mad") throw IoError("checkpoint kind mismatch: " + ckpt.kind);
    auto model =
        std::make_unique<MadDetector>(mad_config_from_json(nlohmann::json::parse(ckpt.config_json)));
    load_params_from_checkpoint(model->params(), ckpt);
    return model;
}

void save_autoencoder(const std::string& path, const ConvAutoencoder& model) {
    write_checkpoint(path, checkpoint_from_params("autoencoder",
                                                  autoencoder_config_json(model.config()).dump(),
                                                  model.params()));
}

std::unique_ptr<ConvAutoencoder> load_autoencoder(const std::string& path) {
    Checkpoint ckpt = read_checkpoint(path);
    if (ckpt.kind != "autoencoder") throw IoError("checkpoint kind mismatch: " + ckpt.kind);
    auto model = std::make_unique<ConvAutoencoder>(
        autoencoder_config_from_json(nlohmann::json::parse(ckpt.config_json)));
    load_params_from_checkpoint(model->params(), ckpt);
    return model;
}

void save_dataset(const std::string& dir, const ToyDataset& dataset) {
    ensure_dir(dir);
    ensure_dir(dir + "/images");

    std::ostringstream manifest;
    manifest << "# image_id\tpath\tidentity\tsample\tsplit\tgroup\n";
    for (const auto& img : dataset.images) {
        const std::string rel = "images/" + img.image_id + ".pgm";
        write_pgm(dir + "/" + rel, img.pixels);
        manifest << img.image_id << '\t' << rel << '\t' << img.identity_label << '\t'
                 << img.sample_index << '\t' << img.split << '\t'
                 << dataset.identity(img.identity_label).group << '\n';
    }
    write_text_file(dir + "/manifest.tsv", manifest.str());

    std::ostringstream ids;
    ids << "# label\tid\tgroup\tparams\n";
    for (const auto& ident : dataset.identities) {
        ids << ident.label << '\t' << ident.id_string() << '\t' << ident.group;
        for (float p : ident.id_params) {
            char buf[24];
            std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(p));
            ids << '\t' << buf;
        }
        ids << '\n';
    }
    write_text_file(dir + "/identities.tsv", ids.str());

    nlohmann::json j;
    j["n_identities"] = dataset.config.n_identities;
    j["samples_per_identity"] = dataset.config.samples_per_identity;
    j["image_size"] = dataset.config.image_size;
    j["eval_fraction"] = dataset.config.eval_fraction;
    j["jitter_strength"] = dataset.config.jitter_strength;
    j["seed"] = dataset.config.seed;
    write_text_file(dir + "/dataset.json", j.dump(2));
}

ToyDataset load_dataset(const std::string& dir) {
    ToyDataset ds;
    nlohmann::json j = nlohmann::json::parse(read_text_file(dir + "/dataset.json"));
    ds.config.n_identities = j.at("n_identities").get<int>();
    ds.config.samples_per_identity = j.at("samples_per_identity").get<int>();
    ds.config.image_size = j.at("image_size").get<int>();
    ds.config.eval_fraction = j.at("eval_fraction").get<double>();
    ds.config.jitter_strength = j.at("jitter_strength").get<double>();
    ds.config.seed = j.at("seed").get<std::uint64_t>();

    {
        std::istringstream is(read_text_file(dir + "/identities.tsv"));
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ls(line);
            std::string tok;
            SyntheticIdentity ident;
            std::getline(ls, tok, '\t');
            ident.label = std::stoi(tok);
            std::getline(ls, tok, '\t');  // id string, derived from label
            std::getline(ls, ident.group, '\t');
            while (std::getline(ls, tok, '\t')) ident.id_params.push_back(std::stof(tok));
            ds.identities.push_back(std::move(ident));
        }
    }
    {
        std::istringstream is(read_text_file(dir + "/manifest.tsv"));
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ls(line);
            std::string path, tok;
            ToyImage img;
            std::getline(ls, img.image_id, '\t');
            std::getline(ls, path, '\t');
            std::getline(ls, tok, '\t');
            img.identity_label = std::stoi(tok);
            std::getline(ls, tok, '\t');
            img.sample_index = std::stoi(tok);
            std::getline(ls, img.split, '\t');
            img.pixels = read_pgm(dir + "/" + path);
            ds.images.push_back(std::move(img));
        }
    }
    if (ds.identities.empty() || ds.images.empty()) throw DataError("load_dataset: empty dataset in " + dir);
    return ds;
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw IoError("cannot create directory " + path + ": " + ec.message());
}

bool file_exists(const std::string& path) {
    return std::filesystem::exists(path);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path);
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw IoError("failed writing " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace morphlab
