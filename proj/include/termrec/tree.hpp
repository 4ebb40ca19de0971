#pragma once

#include <cstdint>
#include <vector>

#include "termrec/common.hpp"
#include "termrec/rng.hpp"

namespace termrec {

struct TreeNode {
    int feature = -1;      // -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;              // regression leaf value
    std::vector<double> distribution;  // classification leaf class weights
};

// CART regression tree using the Friedman MSE improvement score
// (n_l * n_r / (n_l + n_r)) * (mean_l - mean_r)^2 with midpoint thresholds.
struct RegressionTree {
    std::vector<TreeNode> nodes;

    void fit(const Matrix& x, const std::vector<double>& targets, size_t max_depth);
    size_t leaf_index(const double* row) const;
    double predict(const double* row) const { return nodes[leaf_index(row)].value; }
};

// CART classification tree, weighted Gini impurity. feature_subsample = 0
// means all features are considered at every split.
struct ClassificationTree {
    std::vector<TreeNode> nodes;
    size_t n_classes = 0;

    void fit(const Matrix& x, const std::vector<int>& labels, const std::vector<double>& weights,
             size_t n_classes, size_t max_depth, size_t feature_subsample, Rng& rng);
    const std::vector<double>& leaf_distribution(const double* row) const;
    int predict(const double* row) const;
};

}  // namespace termrec
