#include "termrec/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace termrec {

namespace {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;  // improvement; <= 0 means no usable split
};

// Sorts idx by feature value; returns false when the feature is constant.
bool sort_by_feature(const Matrix& x, std::vector<size_t>& idx, size_t feature) {
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        double va = x.at(a, feature), vb = x.at(b, feature);
        if (va != vb) return va < vb;
        return a < b;  // deterministic tie order
    });
    return x.at(idx.front(), feature) != x.at(idx.back(), feature);
}

}  // namespace

void RegressionTree::fit(const Matrix& x, const std::vector<double>& targets, size_t max_depth) {
    if (x.rows() == 0) throw EmptyInput("RegressionTree::fit: no rows");
    if (x.rows() != targets.size()) throw LengthMismatch("RegressionTree::fit");
    nodes.clear();

    struct Work {
        int node;
        std::vector<size_t> idx;
        size_t depth;
    };
    std::vector<size_t> all(x.rows());
    std::iota(all.begin(), all.end(), 0);
    nodes.emplace_back();
    std::vector<Work> stack;
    stack.push_back({0, std::move(all), 0});

    while (!stack.empty()) {
        Work w = std::move(stack.back());
        stack.pop_back();
        TreeNode& node = nodes[static_cast<size_t>(w.node)];

        double sum = 0.0;
        for (size_t i : w.idx) sum += targets[i];
        double mean = sum / static_cast<double>(w.idx.size());
        node.value = mean;

        if (w.idx.size() < 2 || (max_depth && w.depth >= max_depth)) continue;

        Split best;
        std::vector<size_t> sorted = w.idx;
        for (size_t f = 0; f < x.cols(); ++f) {
            if (!sort_by_feature(x, sorted, f)) continue;
            double left_sum = 0.0;
            double nl = 0.0;
            double total = sum;
            double n = static_cast<double>(w.idx.size());
            for (size_t i = 0; i + 1 < sorted.size(); ++i) {
                left_sum += targets[sorted[i]];
                nl += 1.0;
                double v = x.at(sorted[i], f);
                double vnext = x.at(sorted[i + 1], f);
                if (v == vnext) continue;
                double nr = n - nl;
                double mean_l = left_sum / nl;
                double mean_r = (total - left_sum) / nr;
                double diff = mean_l - mean_r;
                double score = nl * nr / n * diff * diff;
                if (score > best.score) {
                    best.score = score;
                    best.feature = static_cast<int>(f);
                    best.threshold = 0.5 * (v + vnext);
                }
            }
        }
        if (best.feature < 0 || best.score <= 0.0) continue;

        std::vector<size_t> left, right;
        for (size_t i : w.idx)
            (x.at(i, static_cast<size_t>(best.feature)) <= best.threshold ? left : right)
                .push_back(i);
        if (left.empty() || right.empty()) continue;

        int li = static_cast<int>(nodes.size());
        nodes.emplace_back();
        int ri = static_cast<int>(nodes.size());
        nodes.emplace_back();
        TreeNode& nref = nodes[static_cast<size_t>(w.node)];  // re-take: vector may have grown
        nref.feature = best.feature;
        nref.threshold = best.threshold;
        nref.left = li;
        nref.right = ri;
        stack.push_back({ri, std::move(right), w.depth + 1});
        stack.push_back({li, std::move(left), w.depth + 1});
    }
}

size_t RegressionTree::leaf_index(const double* row) const {
    size_t cur = 0;
    while (nodes[cur].feature >= 0) {
        cur = static_cast<size_t>(row[nodes[cur].feature] <= nodes[cur].threshold
                                      ? nodes[cur].left
                                      : nodes[cur].right);
    }
    return cur;
}

namespace {

double gini(const std::vector<double>& class_weights, double total) {
    if (total <= 0.0) return 0.0;
    double g = 1.0;
    for (double w : class_weights) {
        double p = w / total;
        g -= p * p;
    }
    return g;
}

}  // namespace

void ClassificationTree::fit(const Matrix& x, const std::vector<int>& labels,
                             const std::vector<double>& weights, size_t classes,
                             size_t max_depth, size_t feature_subsample, Rng& rng) {
    if (x.rows() == 0) throw EmptyInput("ClassificationTree::fit: no rows");
    if (x.rows() != labels.size() || x.rows() != weights.size())
        throw LengthMismatch("ClassificationTree::fit");
    n_classes = classes;
    nodes.clear();

    struct Work {
        int node;
        std::vector<size_t> idx;
        size_t depth;
    };
    std::vector<size_t> all(x.rows());
    std::iota(all.begin(), all.end(), 0);
    nodes.emplace_back();
    std::vector<Work> stack;
    stack.push_back({0, std::move(all), 0});

    std::vector<size_t> features(x.cols());
    std::iota(features.begin(), features.end(), 0);

    while (!stack.empty()) {
        Work w = std::move(stack.back());
        stack.pop_back();

        std::vector<double> dist(classes, 0.0);
        double total = 0.0;
        for (size_t i : w.idx) {
            dist[static_cast<size_t>(labels[i])] += weights[i];
            total += weights[i];
        }
        nodes[static_cast<size_t>(w.node)].distribution = dist;

        double parent_gini = gini(dist, total);
        if (w.idx.size() < 2 || parent_gini == 0.0 || (max_depth && w.depth >= max_depth))
            continue;

        // Candidate features, optionally a random subset per split.
        std::vector<size_t> candidates = features;
        if (feature_subsample && feature_subsample < features.size()) {
            rng.shuffle(candidates);
            candidates.resize(feature_subsample);
            std::sort(candidates.begin(), candidates.end());
        }

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_impurity = std::numeric_limits<double>::infinity();
        std::vector<size_t> sorted = w.idx;
        for (size_t f : candidates) {
            if (!sort_by_feature(x, sorted, f)) continue;
            std::vector<double> left_dist(classes, 0.0);
            double left_total = 0.0;
            for (size_t i = 0; i + 1 < sorted.size(); ++i) {
                left_dist[static_cast<size_t>(labels[sorted[i]])] += weights[sorted[i]];
                left_total += weights[sorted[i]];
                double v = x.at(sorted[i], f);
                double vnext = x.at(sorted[i + 1], f);
                if (v == vnext) continue;
                double right_total = total - left_total;
                std::vector<double> right_dist(classes);
                for (size_t c = 0; c < classes; ++c) right_dist[c] = dist[c] - left_dist[c];
                double impurity = (left_total * gini(left_dist, left_total) +
                                   right_total * gini(right_dist, right_total)) /
                                  total;
                if (impurity < best_impurity - 1e-15) {
                    best_impurity = impurity;
                    best_feature = static_cast<int>(f);
                    best_threshold = 0.5 * (v + vnext);
                }
            }
        }
        if (best_feature < 0 || best_impurity >= parent_gini - 1e-15) continue;

        std::vector<size_t> left, right;
        for (size_t i : w.idx)
            (x.at(i, static_cast<size_t>(best_feature)) <= best_threshold ? left : right)
                .push_back(i);
        if (left.empty() || right.empty()) continue;

        int li = static_cast<int>(nodes.size());
        nodes.emplace_back();
        int ri = static_cast<int>(nodes.size());
        nodes.emplace_back();
        TreeNode& nref = nodes[static_cast<size_t>(w.node)];
        nref.feature = best_feature;
        nref.threshold = best_threshold;
        nref.left = li;
        nref.right = ri;
        stack.push_back({ri, std::move(right), w.depth + 1});
        stack.push_back({li, std::move(left), w.depth + 1});
    }
}

const std::vector<double>& ClassificationTree::leaf_distribution(const double* row) const {
    size_t cur = 0;
    while (nodes[cur].feature >= 0) {
        cur = static_cast<size_t>(row[nodes[cur].feature] <= nodes[cur].threshold
                                      ? nodes[cur].left
                                      : nodes[cur].right);
    }
    return nodes[cur].distribution;
}

int ClassificationTree::predict(const double* row) const {
    const auto& dist = leaf_distribution(row);
    return static_cast<int>(std::max_element(dist.begin(), dist.end()) - dist.begin());
}

}  // namespace termrec
