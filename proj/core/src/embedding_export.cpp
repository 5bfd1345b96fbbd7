#include "dre/embedding_export.hpp"

#include <Eigen/Eigenvalues>

#include <sstream>
#include <string>
#include <vector>

#include "dre/errors.hpp"
#include "dre/util.hpp"

namespace dre::stats {

namespace {

struct Row {
    std::string id;
    std::string role;   // context | positive | adversarial | random
    std::string stage;  // normal | disentangled
    Eigen::VectorXd coords;
};

// Top-2 principal directions with a fixed sign convention (largest-|entry|
// coordinate positive) so the projection is fully deterministic.
Eigen::MatrixXd principal_directions(const std::vector<Row>& rows, int dim) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (const auto& row : rows) mean += row.coords;
    mean /= static_cast<double>(rows.size());

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& row : rows) {
        Eigen::VectorXd centered = row.coords - mean;
        cov.noalias() += centered * centered.transpose();
    }
    cov /= static_cast<double>(rows.size());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    Eigen::MatrixXd directions(dim, 2);
    // Eigenvalues come back ascending; take the last two columns.
    directions.col(0) = solver.eigenvectors().col(dim - 1);
    directions.col(1) = solver.eigenvectors().col(dim - 2);
    for (int c = 0; c < 2; ++c) {
        Eigen::Index max_idx = 0;
        directions.col(c).cwiseAbs().maxCoeff(&max_idx);
        if (directions(max_idx, c) < 0.0) directions.col(c) = -directions.col(c);
    }
    return directions;
}

}  // namespace

void export_embeddings(const training::SlmModel& model,
                       std::span<const corpus::DialogueExample> examples,
                       Projection projection,
                       const std::filesystem::path& out_csv) {
    if (!model.trained)
        throw UntrainedScorer("embedding export requires a trained checkpoint");
    if (examples.empty())
        throw EmptyEvaluationSet("no examples to export");

    std::vector<Row> rows;
    for (const auto& ex : examples) {
        enc::Embedding context = model.encode(corpus::flatten_context(ex));
        rows.push_back({ex.id, "context", "normal", context.values});

        auto add_response = [&](const std::string& text, const char* role) {
            enc::Embedding full = model.encode(text);
            rows.push_back({ex.id, role, "normal", full.values});
            auto [robust, non_robust] = model.separate_response(full);
            (void)non_robust;
            rows.push_back({ex.id, role, "disentangled", robust.values});
        };
        for (const auto& r : ex.positives) add_response(r, "positive");
        for (const auto& r : ex.adversarial_negatives) add_response(r, "adversarial");
        if (ex.random_negatives)
            for (const auto& r : *ex.random_negatives) add_response(r, "random");
    }

    int out_dim = model.dim();
    if (projection == Projection::kLinear2d) {
        Eigen::MatrixXd directions = principal_directions(rows, model.dim());
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(model.dim());
        for (const auto& row : rows) mean += row.coords;
        mean /= static_cast<double>(rows.size());
        for (auto& row : rows)
            row.coords = (directions.transpose() * (row.coords - mean)).eval();
        out_dim = 2;
    }

    std::ostringstream out;
    out << "id,role,stage";
    for (int i = 0; i < out_dim; ++i) out << ",c" << i;
    out << "\n";
    for (const auto& row : rows) {
        out << row.id << ',' << row.role << ',' << row.stage;
        for (int i = 0; i < out_dim; ++i)
            out << ',' << util::format_double(row.coords[i]);
        out << "\n";
    }
    util::atomic_write_file(out_csv, out.str());
}

}  // namespace dre::stats
