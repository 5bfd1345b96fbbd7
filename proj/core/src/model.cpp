#include "dre/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "dre/errors.hpp"
#include "dre/losses.hpp"
#include "dre/util.hpp"

namespace dre::training {

using json = nlohmann::json;

enc::Embedding SlmModel::encode(const std::string& text) const {
    if (!backend) throw BackendUnavailable("model has no encoder backend");
    Eigen::VectorXd features = backend->embed(text);
    return enc::normalize(w_encoder * features);
}

std::pair<enc::Embedding, enc::Embedding> SlmModel::separate_response(
    const enc::Embedding& response) const {
    return enc::separate(response, heads);
}

enc::EmbeddingBundle SlmModel::encode_bundle(const enc::Embedding& context,
                                             const std::string& response) const {
    enc::EmbeddingBundle bundle;
    bundle.context = context;
    bundle.response_full = encode(response);
    auto [robust, non_robust] = separate_response(bundle.response_full);
    bundle.robust = std::move(robust);
    bundle.non_robust = std::move(non_robust);
    return bundle;
}

Eigen::Vector3d SlmModel::classify_embeddings(const enc::Embedding& context,
                                              const enc::Embedding& robust) const {
    if (context.dim() != dim() || robust.dim() != dim())
        throw DimensionMismatch("classify: embedding dimension mismatch");
    Eigen::VectorXd input(2 * dim());
    input << context.values, robust.values;
    Eigen::Vector3d logits = w_classifier * input + b_classifier;
    return softmax3(logits);
}

Eigen::Vector3d SlmModel::classify(const std::string& context,
                                   const std::string& response) const {
    if (!trained)
        throw UntrainedScorer("classify requires a trained checkpoint");
    enc::Embedding h_context = encode(context);
    enc::Embedding h_response = encode(response);
    auto [robust, non_robust] = separate_response(h_response);
    (void)non_robust;
    return classify_embeddings(h_context, robust);
}

SlmModel make_model(std::shared_ptr<enc::EncoderBackend> backend,
                    std::uint64_t seed) {
    if (!backend) throw BackendUnavailable("null encoder backend");
    const int d = backend->dimension();

    SlmModel model;
    model.backend = std::move(backend);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto noise = [&](int rows, int cols, double scale) {
        Eigen::MatrixXd m(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) m(r, c) = scale * gauss(rng);
        return m;
    };

    // Identity adapter keeps the raw feature geometry at step zero. The two
    // heads start as distinct noisy identities; identical heads would leave
    // the separation losses at a zero-gradient saddle.
    double head_scale = 0.5 / std::sqrt(static_cast<double>(d));
    model.w_encoder = Eigen::MatrixXd::Identity(d, d);
    model.heads.robust = Eigen::MatrixXd::Identity(d, d) + noise(d, d, head_scale);
    model.heads.non_robust =
        Eigen::MatrixXd::Identity(d, d) + noise(d, d, head_scale);
    model.w_classifier = noise(3, 2 * d, 0.1);
    model.b_classifier = Eigen::Vector3d::Zero();
    return model;
}

namespace {

constexpr char kMagic[8] = {'D', 'R', 'E', 'C', 'K', 'P', 'T', '1'};

void append_u64_le(std::string& out, std::uint64_t value) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

std::uint64_t read_u64_le(const std::string& data, size_t offset) {
    std::uint64_t value = 0;
    for (int i = 0; i < 8; ++i)
        value |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[offset + i])) << (8 * i);
    return value;
}

void append_tensor(std::string& blobs, json& tensors, const char* name,
                   const Eigen::MatrixXd& m) {
    json t;
    t["name"] = name;
    t["rows"] = m.rows();
    t["cols"] = m.cols();
    t["offset"] = blobs.size();
    tensors.push_back(t);
    // Row-major doubles, little-endian. x86-64 is little-endian already;
    // static_assert guards the assumption rather than swapping at runtime.
    static_assert(std::endian::native == std::endian::little,
                  "checkpoint writer assumes a little-endian host");
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            double v = m(r, c);
            char bytes[sizeof(double)];
            std::memcpy(bytes, &v, sizeof(double));
            blobs.append(bytes, sizeof(double));
        }
}

Eigen::MatrixXd read_tensor(const std::string& blobs, const json& t) {
    auto rows = t.at("rows").get<Eigen::Index>();
    auto cols = t.at("cols").get<Eigen::Index>();
    auto offset = t.at("offset").get<size_t>();
    size_t need = offset + static_cast<size_t>(rows * cols) * sizeof(double);
    if (need > blobs.size())
        throw CheckpointFormatError("tensor blob out of bounds");
    Eigen::MatrixXd m(rows, cols);
    size_t pos = offset;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            double v;
            std::memcpy(&v, blobs.data() + pos, sizeof(double));
            m(r, c) = v;
            pos += sizeof(double);
        }
    return m;
}

}  // namespace

void save_checkpoint(const SlmModel& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
    json manifest;
    manifest["format_version"] = 1;
    manifest["byte_order"] = "little";
    manifest["backend"] = {{"name", model.backend->name()},
                           {"dim", model.backend->dimension()}};
    manifest["trained"] = model.trained;
    manifest["config_hash"] = model.config_hash;
    manifest["distance_stats"] = {{"d_min", model.train_d_min},
                                  {"d_max", model.train_d_max}};
    manifest["metrics"] = {
        {"epochs_run", meta.epochs_run},
        {"final_triplet_accuracy", meta.final_triplet_accuracy},
        {"final_cls_accuracy", meta.final_cls_accuracy}};

    std::string blobs;
    json tensors = json::array();
    append_tensor(blobs, tensors, "w_encoder", model.w_encoder);
    append_tensor(blobs, tensors, "w_robust", model.heads.robust);
    append_tensor(blobs, tensors, "w_non_robust", model.heads.non_robust);
    append_tensor(blobs, tensors, "w_classifier", model.w_classifier);
    append_tensor(blobs, tensors, "b_classifier",
                  Eigen::MatrixXd(model.b_classifier));
    manifest["tensors"] = tensors;

    std::string manifest_str = manifest.dump();
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    append_u64_le(out, manifest_str.size());
    out += manifest_str;
    out += blobs;
    util::atomic_write_file(path, out);
}

SlmModel load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta) {
    std::string data = util::read_file(path);
    if (data.size() < sizeof(kMagic) + 8 ||
        std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0)
        throw CheckpointFormatError("not a checkpoint file: " + path.string());

    std::uint64_t manifest_len = read_u64_le(data, sizeof(kMagic));
    size_t manifest_begin = sizeof(kMagic) + 8;
    if (manifest_begin + manifest_len > data.size())
        throw CheckpointFormatError("truncated checkpoint manifest");

    json manifest;
    try {
        manifest = json::parse(data.substr(manifest_begin, manifest_len));
    } catch (const json::exception& e) {
        throw CheckpointFormatError(std::string("bad manifest JSON: ") + e.what());
    }
    std::string blobs = data.substr(manifest_begin + manifest_len);

    SlmModel model;
    model.backend = enc::make_backend(manifest.at("backend").at("name").get<std::string>(),
                                      manifest.at("backend").at("dim").get<int>());
    model.trained = manifest.value("trained", false);
    model.config_hash = manifest.value("config_hash", "");
    model.train_d_min = manifest.at("distance_stats").at("d_min").get<double>();
    model.train_d_max = manifest.at("distance_stats").at("d_max").get<double>();

    for (const auto& t : manifest.at("tensors")) {
        std::string name = t.at("name").get<std::string>();
        Eigen::MatrixXd m = read_tensor(blobs, t);
        if (name == "w_encoder") model.w_encoder = m;
        else if (name == "w_robust") model.heads.robust = m;
        else if (name == "w_non_robust") model.heads.non_robust = m;
        else if (name == "w_classifier") model.w_classifier = m;
        else if (name == "b_classifier") model.b_classifier = Eigen::Vector3d(m);
        else throw CheckpointFormatError("unknown tensor: " + name);
    }
    model.heads.trained = model.trained;

    if (meta) {
        meta->path = path;
        meta->config_hash = model.config_hash;
        meta->d_min = model.train_d_min;
        meta->d_max = model.train_d_max;
        const auto& metrics = manifest.at("metrics");
        meta->epochs_run = metrics.at("epochs_run").get<int>();
        meta->final_triplet_accuracy = metrics.at("final_triplet_accuracy").get<double>();
        meta->final_cls_accuracy = metrics.at("final_cls_accuracy").get<double>();
    }
    return model;
}

}  // namespace dre::training
