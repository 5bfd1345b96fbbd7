#pragma once

#include <Eigen/Core>

#include <memory>
#include <string>
#include <utility>

namespace dre::enc {

// A sentence embedding. `normalized` marks vectors on the unit sphere;
// everything downstream (distances, heads, classifier) operates on those.
struct Embedding {
    Eigen::VectorXd values;
    bool normalized = false;

    int dim() const { return static_cast<int>(values.size()); }
};

// L2-normalizes a copy. Throws NormalizationDegenerate on (near-)zero input.
Embedding normalize(const Eigen::VectorXd& v);

// 1 - cos(a, b), in [0, 2]. Works on raw or normalized inputs; throws
// ZeroVector / DimensionMismatch.
double cosine_distance(const Embedding& a, const Embedding& b);

// Text -> feature vector. Implementations must be deterministic for fixed
// weights and must reject empty text.
class EncoderBackend {
public:
    virtual ~EncoderBackend() = default;

    virtual std::string name() const = 0;
    virtual int dimension() const = 0;
    virtual bool deterministic() const = 0;

    // Unit-norm feature vector. Throws EmptyText when the trimmed input is
    // empty and BackendUnavailable when the backend cannot serve.
    virtual Eigen::VectorXd embed(const std::string& text) const = 0;
};

// Signed feature hashing over lowercased alphanumeric tokens. No weights,
// no I/O, fully deterministic — the test and desk-scale training backend.
class HashingEncoder final : public EncoderBackend {
public:
    explicit HashingEncoder(int dimension = 64);

    std::string name() const override;
    int dimension() const override { return dimension_; }
    bool deterministic() const override { return true; }
    Eigen::VectorXd embed(const std::string& text) const override;

private:
    int dimension_;
};

// Two learned d->d linear projections that split a response embedding into
// the classification-salient ("robust") part and the residual part. Outputs
// are re-normalized so they stay comparable to context embeddings under
// cosine distance.
struct DisentangleHeads {
    Eigen::MatrixXd robust;      // d x d
    Eigen::MatrixXd non_robust;  // d x d
    bool trained = false;

    int dim() const { return static_cast<int>(robust.rows()); }
};

// (robust, non_robust) sub-embeddings of a response embedding.
std::pair<Embedding, Embedding> separate(const Embedding& response,
                                         const DisentangleHeads& heads);

// One response's views plus its context, all of equal dimension.
struct EmbeddingBundle {
    Embedding context;
    Embedding response_full;
    Embedding robust;
    Embedding non_robust;
};

std::shared_ptr<EncoderBackend> make_backend(const std::string& name,
                                             int dimension);

}  // namespace dre::enc
