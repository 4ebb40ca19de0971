#pragma once

#include <cstdint>
#include <vector>

#include "termrec/common.hpp"

namespace termrec {

struct KMeansModel {
    Matrix centroids;  // K x dim
    double inertia = 0.0;
    std::vector<double> inertia_history;  // per Lloyd iteration, non-increasing
};

// k-means++ seeding then Lloyd iterations until the largest centroid shift
// falls below tol or max_iter is reached. Empty clusters are re-seeded from
// the point farthest from its assigned centroid.
KMeansModel fit_kmeans(const Matrix& rows, size_t k, uint64_t seed, size_t max_iter = 300,
                       double tol = 1e-4);

struct GmmModel {
    std::vector<double> weights;
    Matrix means;      // K x dim
    Matrix variances;  // K x dim, diagonal covariances, floored
    std::vector<double> loglik_history;  // per EM iteration, non-decreasing
};

inline constexpr double kGmmVarianceFloor = 1e-6;
inline constexpr double kGmmWeightFloor = 1e-12;

// Diagonal-covariance EM initialized from a k-means fit.
GmmModel fit_gmm(const Matrix& rows, size_t k, size_t em_iters, uint64_t seed);

enum class ClusterKind { KMeans, Gmm };

struct ClusterModel {
    ClusterKind kind = ClusterKind::KMeans;
    size_t k = 0;
    KMeansModel kmeans;
    GmmModel gmm;
};

ClusterModel fit_cluster_model(ClusterKind kind, const Matrix& rows, size_t k, uint64_t seed,
                               size_t kmeans_max_iter, double kmeans_tol, size_t em_iters);

// Nearest centroid (ties to the lowest index) or argmax responsibility.
std::vector<int> assign_clusters(const ClusterModel& model, const Matrix& rows);

// GMM responsibilities for one row (used internally and by tests).
std::vector<double> gmm_responsibilities(const GmmModel& gmm, const double* row, size_t dim);

// Multi-hot presence vector over a flow's segment clusters; bit K marks
// the presence of at least one empty segment.
std::vector<uint8_t> encode_flow_clusters(const std::vector<int>& z, bool had_empty, size_t k);

}  // namespace termrec
