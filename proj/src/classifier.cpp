#include "termrec/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "termrec/features.hpp"

namespace termrec {

std::vector<double> build_classifier_input(const std::vector<uint8_t>& x_se,
                                           const std::vector<double>& x_ff_standardized) {
    std::vector<double> input;
    if (x_ff_standardized.size() != kFlowFeatureDim)
        throw DimensionMismatch("build_classifier_input: flow feature dimension");
    if (x_se.empty()) throw DimensionMismatch("build_classifier_input: empty presence vector");
    input.reserve(x_se.size() + x_ff_standardized.size());
    for (uint8_t b : x_se) input.push_back(static_cast<double>(b));
    input.insert(input.end(), x_ff_standardized.begin(), x_ff_standardized.end());
    return input;
}

std::vector<std::string> classifier_input_names(size_t k) {
    std::vector<std::string> names;
    for (size_t i = 0; i < k; ++i) names.push_back("cluster_" + std::to_string(i));
    names.push_back("empty_segment");
    for (const char* n : kFlowFeatureNames) names.push_back(n);
    return names;
}

ClassifierKind classifier_kind_from_name(const std::string& name) {
    if (name == "gbt") return ClassifierKind::Gbt;
    if (name == "logistic") return ClassifierKind::Logistic;
    if (name == "random_forest") return ClassifierKind::RandomForest;
    if (name == "adaboost") return ClassifierKind::AdaBoost;
    if (name == "neural_net") return ClassifierKind::NeuralNet;
    throw UnknownKind("unknown classifier kind: " + name);
}

const char* classifier_kind_name(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::Gbt: return "gbt";
        case ClassifierKind::Logistic: return "logistic";
        case ClassifierKind::RandomForest: return "random_forest";
        case ClassifierKind::AdaBoost: return "adaboost";
        case ClassifierKind::NeuralNet: return "neural_net";
    }
    throw UnknownKind();
}

namespace {

void check_training_input(const Matrix& x, const std::vector<int>& y, size_t n_classes) {
    if (x.rows() == 0) throw EmptyInput("train: no rows");
    if (x.rows() != y.size()) throw LengthMismatch("train: rows/labels mismatch");
    std::vector<bool> seen(n_classes, false);
    size_t distinct = 0;
    for (int label : y) {
        if (label < 0 || static_cast<size_t>(label) >= n_classes)
            throw IndexOutOfRange("train: label out of range");
        if (!seen[static_cast<size_t>(label)]) {
            seen[static_cast<size_t>(label)] = true;
            ++distinct;
        }
    }
    if (distinct < 2) throw SingleClass("train: need at least two classes present");
}

void softmax_rows(Matrix& scores) {
    for (size_t r = 0; r < scores.rows(); ++r) {
        double* row = scores.row(r);
        double mx = *std::max_element(row, row + scores.cols());
        double sum = 0.0;
        for (size_t c = 0; c < scores.cols(); ++c) {
            row[c] = std::exp(row[c] - mx);
            sum += row[c];
        }
        for (size_t c = 0; c < scores.cols(); ++c) row[c] /= sum;
    }
}

}  // namespace

GbtModel train_gbt(const Matrix& x, const std::vector<int>& y, size_t n_classes,
                   const GbtConfig& cfg) {
    check_training_input(x, y, n_classes);
    size_t n = x.rows();
    double kk = static_cast<double>(n_classes);

    GbtModel model;
    model.n_classes = n_classes;
    model.learning_rate = cfg.learning_rate;
    model.init_scores.assign(n_classes, 0.0);
    for (int label : y) model.init_scores[static_cast<size_t>(label)] += 1.0;
    for (double& s : model.init_scores) s = std::log(std::max(s / static_cast<double>(n), 1e-12));

    Matrix scores(n, n_classes);
    for (size_t i = 0; i < n; ++i)
        for (size_t c = 0; c < n_classes; ++c) scores.at(i, c) = model.init_scores[c];

    Matrix proba = scores;
    softmax_rows(proba);

    std::vector<double> residual(n);
    for (size_t stage = 0; stage < cfg.stages; ++stage) {
        std::vector<RegressionTree> stage_trees(n_classes);
        for (size_t c = 0; c < n_classes; ++c) {
            for (size_t i = 0; i < n; ++i) {
                double yi = y[i] == static_cast<int>(c) ? 1.0 : 0.0;
                residual[i] = yi - proba.at(i, c);
            }
            RegressionTree& tree = stage_trees[c];
            tree.fit(x, residual, cfg.max_depth);

            // Newton-style leaf values: ((K-1)/K) * sum(r) / sum(p(1-p)).
            std::vector<double> num(tree.nodes.size(), 0.0), den(tree.nodes.size(), 0.0);
            for (size_t i = 0; i < n; ++i) {
                size_t leaf = tree.leaf_index(x.row(i));
                num[leaf] += residual[i];
                double p = proba.at(i, c);
                den[leaf] += p * (1.0 - p);
            }
            for (size_t t = 0; t < tree.nodes.size(); ++t) {
                if (tree.nodes[t].feature >= 0) continue;
                tree.nodes[t].value =
                    den[t] > 1e-150 ? (kk - 1.0) / kk * num[t] / den[t] : 0.0;
            }
            for (size_t i = 0; i < n; ++i)
                scores.at(i, c) += cfg.learning_rate * tree.predict(x.row(i));
        }
        model.stages.push_back(std::move(stage_trees));

        proba = scores;
        softmax_rows(proba);
        double deviance = 0.0;
        for (size_t i = 0; i < n; ++i)
            deviance -= std::log(std::max(proba.at(i, static_cast<size_t>(y[i])), 1e-300));
        model.train_deviance.push_back(deviance / static_cast<double>(n));
    }
    return model;
}

Matrix GbtModel::predict_proba(const Matrix& x) const {
    Matrix scores(x.rows(), n_classes);
    for (size_t i = 0; i < x.rows(); ++i)
        for (size_t c = 0; c < n_classes; ++c) scores.at(i, c) = init_scores[c];
    for (const auto& stage : stages)
        for (size_t c = 0; c < n_classes; ++c)
            for (size_t i = 0; i < x.rows(); ++i)
                scores.at(i, c) += learning_rate * stage[c].predict(x.row(i));
    softmax_rows(scores);
    return scores;
}

LogisticModel train_logistic(const Matrix& x, const std::vector<int>& y, size_t n_classes,
                             const LogisticConfig& cfg) {
    check_training_input(x, y, n_classes);
    size_t n = x.rows(), d = x.cols();
    LogisticModel model;
    model.w = Matrix(n_classes, d);
    model.b.assign(n_classes, 0.0);

    Matrix grad_w(n_classes, d);
    std::vector<double> grad_b(n_classes);
    for (size_t iter = 0; iter < cfg.iterations; ++iter) {
        std::fill(grad_w.data().begin(), grad_w.data().end(), 0.0);
        std::fill(grad_b.begin(), grad_b.end(), 0.0);
        for (size_t i = 0; i < n; ++i) {
            const double* xi = x.row(i);
            std::vector<double> z(n_classes);
            for (size_t c = 0; c < n_classes; ++c) {
                double s = model.b[c];
                const double* wc = model.w.row(c);
                for (size_t f = 0; f < d; ++f) s += wc[f] * xi[f];
                z[c] = s;
            }
            double mx = *std::max_element(z.begin(), z.end());
            double sum = 0.0;
            for (double& v : z) {
                v = std::exp(v - mx);
                sum += v;
            }
            for (size_t c = 0; c < n_classes; ++c) {
                double delta = z[c] / sum - (y[i] == static_cast<int>(c) ? 1.0 : 0.0);
                grad_b[c] += delta;
                double* gw = grad_w.row(c);
                for (size_t f = 0; f < d; ++f) gw[f] += delta * xi[f];
            }
        }
        double step = cfg.learning_rate / static_cast<double>(n);
        double shrink = cfg.learning_rate * cfg.l1_penalty;
        for (size_t c = 0; c < n_classes; ++c) {
            model.b[c] -= step * grad_b[c];
            double* wc = model.w.row(c);
            const double* gw = grad_w.row(c);
            for (size_t f = 0; f < d; ++f) {
                double v = wc[f] - step * gw[f];
                // Soft-threshold (proximal L1); bias is not penalized.
                if (v > shrink)
                    wc[f] = v - shrink;
                else if (v < -shrink)
                    wc[f] = v + shrink;
                else
                    wc[f] = 0.0;
            }
        }
    }
    return model;
}

Matrix LogisticModel::predict_proba(const Matrix& x) const {
    Matrix scores(x.rows(), w.rows());
    for (size_t i = 0; i < x.rows(); ++i) {
        const double* xi = x.row(i);
        for (size_t c = 0; c < w.rows(); ++c) {
            double s = b[c];
            const double* wc = w.row(c);
            for (size_t f = 0; f < w.cols(); ++f) s += wc[f] * xi[f];
            scores.at(i, c) = s;
        }
    }
    softmax_rows(scores);
    return scores;
}

ForestModel train_random_forest(const Matrix& x, const std::vector<int>& y, size_t n_classes,
                                const ForestConfig& cfg) {
    check_training_input(x, y, n_classes);
    size_t n = x.rows();
    ForestModel model;
    model.n_classes = n_classes;
    Rng rng(cfg.seed);
    size_t subsample =
        cfg.feature_subsample
            ? std::max<size_t>(1, static_cast<size_t>(std::sqrt(static_cast<double>(x.cols()))))
            : 0;
    std::vector<double> unit_weights(n, 1.0);
    for (size_t t = 0; t < cfg.trees; ++t) {
        ClassificationTree tree;
        if (cfg.bootstrap) {
            Matrix bx(0, x.cols());
            std::vector<int> by;
            for (size_t i = 0; i < n; ++i) {
                size_t pick = static_cast<size_t>(rng.uniform_int(n));
                bx.append_row(x.row(pick), x.cols());
                by.push_back(y[pick]);
            }
            std::vector<double> bw(n, 1.0);
            tree.fit(bx, by, bw, n_classes, cfg.max_depth, subsample, rng);
        } else {
            tree.fit(x, y, unit_weights, n_classes, cfg.max_depth, subsample, rng);
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

Matrix ForestModel::predict_proba(const Matrix& x) const {
    Matrix out(x.rows(), n_classes);
    for (size_t i = 0; i < x.rows(); ++i) {
        for (const auto& tree : trees) {
            const auto& dist = tree.leaf_distribution(x.row(i));
            double total = 0.0;
            for (double v : dist) total += v;
            if (total <= 0.0) continue;
            for (size_t c = 0; c < n_classes; ++c) out.at(i, c) += dist[c] / total;
        }
        double sum = 0.0;
        for (size_t c = 0; c < n_classes; ++c) sum += out.at(i, c);
        if (sum > 0.0)
            for (size_t c = 0; c < n_classes; ++c) out.at(i, c) /= sum;
        else
            for (size_t c = 0; c < n_classes; ++c) out.at(i, c) = 1.0 / static_cast<double>(n_classes);
    }
    return out;
}

AdaBoostModel train_adaboost(const Matrix& x, const std::vector<int>& y, size_t n_classes,
                             const AdaBoostConfig& cfg) {
    check_training_input(x, y, n_classes);
    size_t n = x.rows();
    AdaBoostModel model;
    model.n_classes = n_classes;
    Rng rng(cfg.seed);
    std::vector<double> weights(n, 1.0 / static_cast<double>(n));
    for (size_t stage = 0; stage < cfg.stages; ++stage) {
        ClassificationTree stump;
        stump.fit(x, y, weights, n_classes, 1, 0, rng);
        double err = 0.0;
        std::vector<int> pred(n);
        for (size_t i = 0; i < n; ++i) {
            pred[i] = stump.predict(x.row(i));
            if (pred[i] != y[i]) err += weights[i];
        }
        if (err <= 0.0) {
            // Perfect stump: dominate the vote and stop.
            model.stumps.push_back(std::move(stump));
            model.alphas.push_back(10.0 + std::log(static_cast<double>(n_classes) - 1.0));
            break;
        }
        if (err >= 1.0 - 1.0 / static_cast<double>(n_classes)) break;  // worse than chance
        double alpha = cfg.learning_rate * (std::log((1.0 - err) / err) +
                                            std::log(static_cast<double>(n_classes) - 1.0));
        double sum = 0.0;
        for (size_t i = 0; i < n; ++i) {
            if (pred[i] != y[i]) weights[i] *= std::exp(alpha);
            sum += weights[i];
        }
        for (double& w : weights) w /= sum;
        model.stumps.push_back(std::move(stump));
        model.alphas.push_back(alpha);
    }
    if (model.stumps.empty()) throw Error("train_adaboost: no usable stump found");
    return model;
}

Matrix AdaBoostModel::predict_proba(const Matrix& x) const {
    Matrix out(x.rows(), n_classes);
    for (size_t i = 0; i < x.rows(); ++i) {
        for (size_t t = 0; t < stumps.size(); ++t)
            out.at(i, static_cast<size_t>(stumps[t].predict(x.row(i)))) += alphas[t];
        double sum = 0.0;
        for (size_t c = 0; c < n_classes; ++c) sum += out.at(i, c);
        if (sum > 0.0)
            for (size_t c = 0; c < n_classes; ++c) out.at(i, c) /= sum;
        else
            for (size_t c = 0; c < n_classes; ++c) out.at(i, c) = 1.0 / static_cast<double>(n_classes);
    }
    return out;
}

Matrix ClassifierModel::predict_proba(const Matrix& x) const {
    switch (kind) {
        case ClassifierKind::Gbt: return gbt.predict_proba(x);
        case ClassifierKind::Logistic: return logistic.predict_proba(x);
        case ClassifierKind::RandomForest: return forest.predict_proba(x);
        case ClassifierKind::AdaBoost: return adaboost.predict_proba(x);
        case ClassifierKind::NeuralNet: return predict_softmax(nn, x);
    }
    throw UnknownKind();
}

std::vector<int> ClassifierModel::predict(const Matrix& x) const {
    Matrix proba = predict_proba(x);
    std::vector<int> labels(x.rows());
    for (size_t i = 0; i < x.rows(); ++i) {
        const double* row = proba.row(i);
        labels[i] = static_cast<int>(std::max_element(row, row + proba.cols()) - row);
    }
    return labels;
}

MetricsReport evaluate(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                       size_t n_classes, bool eq_literal_accuracy) {
    if (y_true.size() != y_pred.size()) throw LengthMismatch("evaluate: length mismatch");
    if (y_true.empty()) throw EmptyInput("evaluate: no samples");
    MetricsReport rep;
    rep.tp.assign(n_classes, 0);
    rep.fp.assign(n_classes, 0);
    rep.fn.assign(n_classes, 0);
    rep.confusion = Matrix(n_classes, n_classes);
    for (size_t i = 0; i < y_true.size(); ++i) {
        size_t t = static_cast<size_t>(y_true[i]);
        size_t p = static_cast<size_t>(y_pred[i]);
        if (t >= n_classes || p >= n_classes) throw IndexOutOfRange("evaluate: label out of range");
        rep.confusion.at(t, p) += 1.0;
        if (t == p) {
            ++rep.tp[t];
        } else {
            ++rep.fn[t];
            ++rep.fp[p];
        }
    }
    size_t correct = 0, eq_denominator = 0;
    double precision_sum = 0.0, recall_sum = 0.0;
    for (size_t c = 0; c < n_classes; ++c) {
        correct += rep.tp[c];
        eq_denominator += rep.tp[c] + rep.fp[c] + rep.fn[c];
        size_t pd = rep.tp[c] + rep.fp[c];
        size_t rd = rep.tp[c] + rep.fn[c];
        precision_sum += pd ? static_cast<double>(rep.tp[c]) / static_cast<double>(pd) : 0.0;
        recall_sum += rd ? static_cast<double>(rep.tp[c]) / static_cast<double>(rd) : 0.0;
    }
    rep.accuracy = eq_literal_accuracy
                       ? (eq_denominator ? static_cast<double>(correct) /
                                               static_cast<double>(eq_denominator)
                                         : 0.0)
                       : static_cast<double>(correct) / static_cast<double>(y_true.size());
    rep.precision_macro = precision_sum / static_cast<double>(n_classes);
    rep.recall_macro = recall_sum / static_cast<double>(n_classes);
    double pr = rep.precision_macro + rep.recall_macro;
    rep.f1_macro = pr > 0.0 ? 2.0 * rep.precision_macro * rep.recall_macro / pr : 0.0;
    return rep;
}

std::string MetricsReport::to_text(const std::vector<std::string>& class_names) const {
    std::ostringstream out;
    out.precision(6);
    out << std::fixed;
    out << "accuracy        " << accuracy << "\n";
    out << "precision_macro " << precision_macro << "\n";
    out << "recall_macro    " << recall_macro << "\n";
    out << "f1_macro        " << f1_macro << "\n";
    for (size_t c = 0; c < class_names.size(); ++c)
        out << "class " << class_names[c] << " tp=" << tp[c] << " fp=" << fp[c]
            << " fn=" << fn[c] << "\n";
    return out.str();
}

std::string MetricsReport::confusion_tsv(const std::vector<std::string>& class_names) const {
    std::ostringstream out;
    out << "true\\pred";
    for (const auto& n : class_names) out << '\t' << n;
    out << '\n';
    for (size_t r = 0; r < confusion.rows(); ++r) {
        out << class_names[r];
        for (size_t c = 0; c < confusion.cols(); ++c)
            out << '\t' << static_cast<long long>(confusion.at(r, c));
        out << '\n';
    }
    return out.str();
}

}  // namespace termrec
