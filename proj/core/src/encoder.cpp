#include "dre/encoder.hpp"

#include <cmath>

#include "dre/errors.hpp"
#include "dre/util.hpp"

namespace dre::enc {

namespace {
constexpr double kNormEps = 1e-12;
}

Embedding normalize(const Eigen::VectorXd& v) {
    double norm = v.norm();
    if (!(norm > kNormEps))
        throw NormalizationDegenerate("cannot L2-normalize a zero vector");
    return Embedding{v / norm, true};
}

double cosine_distance(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim())
        throw DimensionMismatch("cosine_distance: " + std::to_string(a.dim()) +
                                " vs " + std::to_string(b.dim()));
    double na = a.values.norm();
    double nb = b.values.norm();
    if (!(na > kNormEps) || !(nb > kNormEps))
        throw ZeroVector("cosine_distance on zero vector");
    double cosine = a.values.dot(b.values) / (na * nb);
    // Floating point can nudge |cos| past 1 for (anti-)parallel vectors.
    if (cosine > 1.0) cosine = 1.0;
    if (cosine < -1.0) cosine = -1.0;
    return 1.0 - cosine;
}

HashingEncoder::HashingEncoder(int dimension) : dimension_(dimension) {
    if (dimension < 2)
        throw BackendUnavailable("hashing encoder needs dimension >= 2");
}

std::string HashingEncoder::name() const {
    return "hashing-" + std::to_string(dimension_);
}

Eigen::VectorXd HashingEncoder::embed(const std::string& text) const {
    std::string trimmed = util::trim(text);
    if (trimmed.empty()) throw EmptyText("cannot encode empty text");

    Eigen::VectorXd v = Eigen::VectorXd::Zero(dimension_);
    for (const auto& token : util::tokenize(trimmed)) {
        std::uint64_t h = util::fnv1a64(token);
        auto index = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dimension_));
        double sign = ((h >> 32) & 1ULL) ? 1.0 : -1.0;
        v[index] += sign;
    }
    if (v.norm() <= kNormEps) {
        // Distinct tokens can cancel in a bucket; fall back to a single
        // deterministic coordinate so the text still embeds.
        std::uint64_t h = util::fnv1a64(trimmed);
        v[static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dimension_))] = 1.0;
    }
    return v / v.norm();
}

std::pair<Embedding, Embedding> separate(const Embedding& response,
                                         const DisentangleHeads& heads) {
    if (response.dim() != heads.dim())
        throw DimensionMismatch("separate: embedding dim " +
                                std::to_string(response.dim()) + " vs heads dim " +
                                std::to_string(heads.dim()));
    Embedding robust = normalize(heads.robust * response.values);
    Embedding non_robust = normalize(heads.non_robust * response.values);
    return {std::move(robust), std::move(non_robust)};
}

std::shared_ptr<EncoderBackend> make_backend(const std::string& name,
                                             int dimension) {
    if (name == "hashing" || name.rfind("hashing-", 0) == 0)
        return std::make_shared<HashingEncoder>(dimension);
    throw BackendUnavailable("unknown encoder backend: " + name);
}

}  // namespace dre::enc
