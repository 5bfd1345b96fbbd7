#include "dre/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "dre/errors.hpp"
#include "dre/util.hpp"

namespace dre::training {

void TrainingConfig::validate() const {
    if (margin_triplet <= 0.0 || margin_pair <= 0.0)
        throw ConfigError("margins must be positive");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
}

std::string TrainingConfig::canonical_string() const {
    std::ostringstream ss;
    ss << "margin_triplet=" << util::format_double(margin_triplet)
       << ";margin_pair=" << util::format_double(margin_pair)
       << ";epochs=" << epochs << ";batch_size=" << batch_size
       << ";learning_rate=" << util::format_double(learning_rate)
       << ";seed=" << seed
       << ";pairing=" << (pairing == corpus::Pairing::kAligned ? "aligned" : "cartesian")
       << ";early_stop_patience=" << early_stop_patience;
    return ss.str();
}

std::string TrainingConfig::hash() const {
    return util::sha256_hex(canonical_string());
}

const Eigen::VectorXd& FeatureCache::get(const std::string& text) {
    auto it = cache_.find(text);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(text, backend_.embed(text)).first->second;
}

namespace {

// Forward state for one encoded text: pre-normalization vector and the unit
// output, enough to backpropagate through the normalization.
struct Encoded {
    Eigen::VectorXd raw;   // backend features
    Eigen::VectorXd pre;   // w_encoder * raw
    Eigen::VectorXd unit;  // pre / |pre|
    double norm = 0.0;
};

Encoded encode_forward(const SlmModel& model, const Eigen::VectorXd& features) {
    Encoded e;
    e.raw = features;
    e.pre = model.w_encoder * features;
    e.norm = e.pre.norm();
    if (!(e.norm > 1e-12))
        throw NormalizationDegenerate("adapter output collapsed to zero");
    e.unit = e.pre / e.norm;
    return e;
}

struct Projected {
    Eigen::VectorXd pre;
    Eigen::VectorXd unit;
    double norm = 0.0;
};

Projected project_forward(const Eigen::MatrixXd& w, const Eigen::VectorXd& unit_in) {
    Projected p;
    p.pre = w * unit_in;
    p.norm = p.pre.norm();
    if (!(p.norm > 1e-12))
        throw NormalizationDegenerate("head output collapsed to zero");
    p.unit = p.pre / p.norm;
    return p;
}

// d/d(pre) for unit = pre/|pre| given g = d/d(unit).
Eigen::VectorXd normalize_backward(const Eigen::VectorXd& g,
                                   const Eigen::VectorXd& unit, double norm) {
    return (g - g.dot(unit) * unit) / norm;
}

struct ClsInstance {
    const Eigen::VectorXd* sub;
    TripletClassLabel label;
};

}  // namespace

LossReport batch_loss_and_gradients(const SlmModel& model,
                                    std::span<const corpus::Triplet> batch,
                                    const TrainingConfig& config,
                                    FeatureCache& features, Gradients* grads) {
    const int d = model.dim();
    if (grads) {
        grads->w_encoder = Eigen::MatrixXd::Zero(d, d);
        grads->w_robust = Eigen::MatrixXd::Zero(d, d);
        grads->w_non_robust = Eigen::MatrixXd::Zero(d, d);
        grads->w_classifier = Eigen::MatrixXd::Zero(3, 2 * d);
        grads->b_classifier = Eigen::Vector3d::Zero();
    }

    LossReport report;
    const double inv_n = 1.0 / static_cast<double>(batch.size());

    for (const auto& triplet : batch) {
        Encoded c = encode_forward(model, features.get(triplet.context));
        Encoded p = encode_forward(model, features.get(triplet.positive));
        Encoded a = encode_forward(model, features.get(triplet.adversarial));

        Projected pr = project_forward(model.heads.robust, p.unit);
        Projected pn = project_forward(model.heads.non_robust, p.unit);
        Projected ar = project_forward(model.heads.robust, a.unit);
        Projected an = project_forward(model.heads.non_robust, a.unit);

        // Distances on the unit sphere reduce to 1 - dot.
        double d_cp = 1.0 - c.unit.dot(p.unit);
        double d_ca = 1.0 - c.unit.dot(a.unit);
        double d1 = 1.0 - pr.unit.dot(pn.unit);
        double d2 = 1.0 - ar.unit.dot(an.unit);
        double d3 = 1.0 - pr.unit.dot(ar.unit);

        double trip_pre = d_cp - d_ca + config.margin_triplet;
        double l_triplet = std::max(trip_pre, 0.0);
        double h1 = std::max(config.margin_pair - d1, 0.0);
        double h2 = std::max(config.margin_pair - d2, 0.0);
        double h3 = std::max(config.margin_pair - d3, 0.0);

        const ClsInstance instances[4] = {
            {&pr.unit, TripletClassLabel::kPositiveRobust},
            {&ar.unit, TripletClassLabel::kAdversarialRobust},
            {&pn.unit, TripletClassLabel::kNonRobust},
            {&an.unit, TripletClassLabel::kNonRobust},
        };

        double l_cls = 0.0;
        Eigen::VectorXd g_c = Eigen::VectorXd::Zero(d);
        Eigen::VectorXd g_p = Eigen::VectorXd::Zero(d);
        Eigen::VectorXd g_a = Eigen::VectorXd::Zero(d);
        Eigen::VectorXd g_pr = Eigen::VectorXd::Zero(d);
        Eigen::VectorXd g_pn = Eigen::VectorXd::Zero(d);
        Eigen::VectorXd g_ar = Eigen::VectorXd::Zero(d);
        Eigen::VectorXd g_an = Eigen::VectorXd::Zero(d);

        Eigen::VectorXd input(2 * d);
        for (const auto& inst : instances) {
            input << c.unit, *inst.sub;
            Eigen::Vector3d logits = model.w_classifier * input + model.b_classifier;
            Eigen::Vector3d prob = softmax3(logits);
            l_cls += classifier_loss(logits, inst.label);

            if (grads) {
                Eigen::Vector3d dz = prob;
                dz[static_cast<int>(inst.label)] -= 1.0;
                dz *= 0.25 * inv_n;  // mean over 4 instances, mean over batch
                grads->w_classifier.noalias() += dz * input.transpose();
                grads->b_classifier += dz;
                Eigen::VectorXd dx = model.w_classifier.transpose() * dz;
                g_c += dx.head(d);
                if (inst.sub == &pr.unit) g_pr += dx.tail(d);
                else if (inst.sub == &pn.unit) g_pn += dx.tail(d);
                else if (inst.sub == &ar.unit) g_ar += dx.tail(d);
                else g_an += dx.tail(d);
            }
        }
        l_cls *= 0.25;

        report.triplet += l_triplet * inv_n;
        report.ins_same_pos += h1 * h1 * inv_n;
        report.ins_same_neg += h2 * h2 * inv_n;
        report.out_robust += h3 * h3 * inv_n;
        report.cls += l_cls * inv_n;

        if (!grads) continue;

        // Triplet hinge.
        if (trip_pre > 0.0) {
            g_c += inv_n * (a.unit - p.unit);
            g_p += inv_n * (-c.unit);
            g_a += inv_n * c.unit;
        }
        // Pair hinges: dL/dd = -2h, dd/du = -other.
        if (h1 > 0.0) {
            g_pr += inv_n * 2.0 * h1 * pn.unit;
            g_pn += inv_n * 2.0 * h1 * pr.unit;
        }
        if (h2 > 0.0) {
            g_ar += inv_n * 2.0 * h2 * an.unit;
            g_an += inv_n * 2.0 * h2 * ar.unit;
        }
        if (h3 > 0.0) {
            g_pr += inv_n * 2.0 * h3 * ar.unit;
            g_ar += inv_n * 2.0 * h3 * pr.unit;
        }

        // Heads: backprop through their normalization, then accumulate
        // weight gradients and pass the rest down to the full embeddings.
        Eigen::VectorXd g_pr_pre = normalize_backward(g_pr, pr.unit, pr.norm);
        Eigen::VectorXd g_pn_pre = normalize_backward(g_pn, pn.unit, pn.norm);
        Eigen::VectorXd g_ar_pre = normalize_backward(g_ar, ar.unit, ar.norm);
        Eigen::VectorXd g_an_pre = normalize_backward(g_an, an.unit, an.norm);

        grads->w_robust.noalias() += g_pr_pre * p.unit.transpose();
        grads->w_robust.noalias() += g_ar_pre * a.unit.transpose();
        grads->w_non_robust.noalias() += g_pn_pre * p.unit.transpose();
        grads->w_non_robust.noalias() += g_an_pre * a.unit.transpose();

        g_p += model.heads.robust.transpose() * g_pr_pre;
        g_p += model.heads.non_robust.transpose() * g_pn_pre;
        g_a += model.heads.robust.transpose() * g_ar_pre;
        g_a += model.heads.non_robust.transpose() * g_an_pre;

        // Adapter: through the encoder normalization.
        Eigen::VectorXd g_c_pre = normalize_backward(g_c, c.unit, c.norm);
        Eigen::VectorXd g_p_pre = normalize_backward(g_p, p.unit, p.norm);
        Eigen::VectorXd g_a_pre = normalize_backward(g_a, a.unit, a.norm);
        grads->w_encoder.noalias() += g_c_pre * c.raw.transpose();
        grads->w_encoder.noalias() += g_p_pre * p.raw.transpose();
        grads->w_encoder.noalias() += g_a_pre * a.raw.transpose();
    }

    report.total = total_loss(report);
    return report;
}

double triplet_accuracy(const SlmModel& model,
                        std::span<const corpus::Triplet> triplets) {
    if (triplets.empty())
        throw EmptyEvaluationSet("triplet_accuracy on empty set");
    FeatureCache features(*model.backend);
    size_t correct = 0;
    for (const auto& t : triplets) {
        Encoded c = encode_forward(model, features.get(t.context));
        Encoded p = encode_forward(model, features.get(t.positive));
        Encoded a = encode_forward(model, features.get(t.adversarial));
        Projected pr = project_forward(model.heads.robust, p.unit);
        Projected ar = project_forward(model.heads.robust, a.unit);
        double d_pos = 1.0 - c.unit.dot(pr.unit);
        double d_adv = 1.0 - c.unit.dot(ar.unit);
        if (d_pos < d_adv) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(triplets.size());
}

double classifier_accuracy(const SlmModel& model,
                           std::span<const corpus::Triplet> triplets) {
    if (triplets.empty())
        throw EmptyEvaluationSet("classifier_accuracy on empty set");
    FeatureCache features(*model.backend);
    size_t correct = 0;
    size_t total = 0;
    for (const auto& t : triplets) {
        Encoded c = encode_forward(model, features.get(t.context));
        Encoded p = encode_forward(model, features.get(t.positive));
        Encoded a = encode_forward(model, features.get(t.adversarial));
        Projected pr = project_forward(model.heads.robust, p.unit);
        Projected pn = project_forward(model.heads.non_robust, p.unit);
        Projected ar = project_forward(model.heads.robust, a.unit);
        Projected an = project_forward(model.heads.non_robust, a.unit);

        const std::pair<const Eigen::VectorXd*, int> instances[4] = {
            {&pr.unit, 1}, {&ar.unit, 0}, {&pn.unit, 2}, {&an.unit, 2}};
        Eigen::VectorXd input(2 * model.dim());
        for (const auto& [sub, label] : instances) {
            input << c.unit, *sub;
            Eigen::Vector3d logits = model.w_classifier * input + model.b_classifier;
            int argmax = 0;
            logits.maxCoeff(&argmax);
            if (argmax == label) ++correct;
            ++total;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

std::string metrics_to_csv(std::span<const EpochMetrics> rows) {
    std::ostringstream out;
    out << "epoch,triplet_loss,ins_same_pos,ins_same_neg,out_robust,cls_loss,"
           "total,triplet_acc,cls_acc\n";
    for (const auto& row : rows) {
        out << row.epoch << ',' << util::format_double(row.losses.triplet) << ','
            << util::format_double(row.losses.ins_same_pos) << ','
            << util::format_double(row.losses.ins_same_neg) << ','
            << util::format_double(row.losses.out_robust) << ','
            << util::format_double(row.losses.cls) << ','
            << util::format_double(row.losses.total) << ','
            << util::format_double(row.triplet_accuracy) << ','
            << util::format_double(row.cls_accuracy) << '\n';
    }
    return out.str();
}

namespace {

struct AdamState {
    Eigen::MatrixXd m, v;
    explicit AdamState(Eigen::Index rows, Eigen::Index cols)
        : m(Eigen::MatrixXd::Zero(rows, cols)), v(Eigen::MatrixXd::Zero(rows, cols)) {}
};

void adam_step(Eigen::Ref<Eigen::MatrixXd> w, const Eigen::MatrixXd& g,
               AdamState& state, double lr, int t) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    state.m = b1 * state.m + (1.0 - b1) * g;
    state.v = b2 * state.v + (1.0 - b2) * g.cwiseProduct(g);
    double correction1 = 1.0 - std::pow(b1, t);
    double correction2 = 1.0 - std::pow(b2, t);
    Eigen::MatrixXd m_hat = state.m / correction1;
    Eigen::MatrixXd v_hat = state.v / correction2;
    Eigen::MatrixXd denom =
        v_hat.cwiseSqrt() + Eigen::MatrixXd::Constant(w.rows(), w.cols(), eps);
    w -= lr * m_hat.cwiseQuotient(denom);
}

}  // namespace

CheckpointMeta train(std::span<const corpus::Triplet> triplets,
                     std::shared_ptr<enc::EncoderBackend> backend,
                     const TrainingConfig& config,
                     const std::filesystem::path& checkpoint_path,
                     const std::filesystem::path& metrics_path,
                     SlmModel* out_model, std::vector<EpochMetrics>* out_metrics) {
    config.validate();
    if (triplets.empty()) throw EmptyTrainingSet("no triplets to train on");

    SlmModel model = make_model(backend, config.seed);
    const int d = model.dim();
    FeatureCache features(*backend);

    AdamState s_enc(d, d), s_rob(d, d), s_non(d, d), s_cls(3, 2 * d), s_b(3, 1);
    int step = 0;

    std::vector<size_t> order(triplets.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::mt19937_64 shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

    std::vector<EpochMetrics> metrics;
    double best_acc = -1.0;
    int stale_epochs = 0;

    std::vector<corpus::Triplet> batch;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (size_t begin = 0; begin < order.size();
             begin += static_cast<size_t>(config.batch_size)) {
            size_t end = std::min(order.size(),
                                  begin + static_cast<size_t>(config.batch_size));
            batch.clear();
            for (size_t i = begin; i < end; ++i) batch.push_back(triplets[order[i]]);

            Gradients grads;
            LossReport report =
                batch_loss_and_gradients(model, batch, config, features, &grads);
            if (!std::isfinite(report.total))
                throw NonFiniteLoss("non-finite loss at epoch " + std::to_string(epoch) +
                                    ", batch offset " + std::to_string(begin) +
                                    " (triplet=" + util::format_double(report.triplet) +
                                    ", cls=" + util::format_double(report.cls) + ")");

            ++step;
            adam_step(model.w_encoder, grads.w_encoder, s_enc, config.learning_rate, step);
            adam_step(model.heads.robust, grads.w_robust, s_rob, config.learning_rate, step);
            adam_step(model.heads.non_robust, grads.w_non_robust, s_non,
                      config.learning_rate, step);
            adam_step(model.w_classifier, grads.w_classifier, s_cls,
                      config.learning_rate, step);
            Eigen::MatrixXd b = model.b_classifier;
            adam_step(b, Eigen::MatrixXd(grads.b_classifier), s_b,
                      config.learning_rate, step);
            model.b_classifier = Eigen::Vector3d(b);
        }

        EpochMetrics row;
        row.epoch = epoch;
        row.losses = batch_loss_and_gradients(model, triplets, config, features, nullptr);
        row.triplet_accuracy = triplet_accuracy(model, triplets);
        row.cls_accuracy = classifier_accuracy(model, triplets);
        metrics.push_back(row);

        if (row.triplet_accuracy > best_acc) {
            best_acc = row.triplet_accuracy;
            stale_epochs = 0;
        } else if (config.early_stop_patience > 0 &&
                   ++stale_epochs >= config.early_stop_patience) {
            break;
        }
    }

    model.trained = true;
    model.heads.trained = true;
    model.config_hash = config.hash();

    // Distance calibration over every (context, response) pair seen in
    // training, responses taken through the robust head.
    double d_min = std::numeric_limits<double>::infinity();
    double d_max = -std::numeric_limits<double>::infinity();
    for (const auto& t : triplets) {
        Encoded c = encode_forward(model, features.get(t.context));
        for (const std::string* text : {&t.positive, &t.adversarial}) {
            Encoded r = encode_forward(model, features.get(*text));
            Projected robust = project_forward(model.heads.robust, r.unit);
            double dist = 1.0 - c.unit.dot(robust.unit);
            d_min = std::min(d_min, dist);
            d_max = std::max(d_max, dist);
        }
    }
    model.train_d_min = d_min;
    model.train_d_max = d_max;

    CheckpointMeta meta;
    meta.path = checkpoint_path;
    meta.epochs_run = metrics.empty() ? 0 : metrics.back().epoch;
    meta.final_triplet_accuracy = metrics.empty() ? 0.0 : metrics.back().triplet_accuracy;
    meta.final_cls_accuracy = metrics.empty() ? 0.0 : metrics.back().cls_accuracy;
    meta.d_min = d_min;
    meta.d_max = d_max;
    meta.config_hash = model.config_hash;

    if (!checkpoint_path.empty()) save_checkpoint(model, meta, checkpoint_path);
    if (!metrics_path.empty())
        util::atomic_write_file(metrics_path, metrics_to_csv(metrics));
    if (out_model) *out_model = std::move(model);
    if (out_metrics) *out_metrics = std::move(metrics);
    return meta;
}

}  // namespace dre::training
