#include "termrec/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "termrec/rng.hpp"

namespace termrec {

namespace {

size_t nearest_centroid(const Matrix& centroids, const double* row, size_t dim,
                        double* dist_out = nullptr) {
    size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < centroids.rows(); ++c) {
        double d = squared_distance(centroids.row(c), row, dim);
        if (d < best_d) {  // strict: ties resolve to the lowest index
            best_d = d;
            best = c;
        }
    }
    if (dist_out) *dist_out = best_d;
    return best;
}

Matrix kmeanspp_init(const Matrix& rows, size_t k, Rng& rng) {
    size_t n = rows.rows(), dim = rows.cols();
    Matrix centroids(k, dim);
    size_t first = static_cast<size_t>(rng.uniform_int(n));
    std::copy(rows.row(first), rows.row(first) + dim, centroids.row(0));
    std::vector<double> d2(n);
    for (size_t i = 0; i < n; ++i) d2[i] = squared_distance(rows.row(i), centroids.row(0), dim);
    for (size_t c = 1; c < k; ++c) {
        size_t pick = rng.weighted_index(d2);
        std::copy(rows.row(pick), rows.row(pick) + dim, centroids.row(c));
        for (size_t i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], squared_distance(rows.row(i), centroids.row(c), dim));
    }
    return centroids;
}

}  // namespace

KMeansModel fit_kmeans(const Matrix& rows, size_t k, uint64_t seed, size_t max_iter, double tol) {
    size_t n = rows.rows(), dim = rows.cols();
    if (n < k) throw TooFewRows("fit_kmeans: fewer rows than clusters");
    Rng rng(seed);
    KMeansModel model;
    model.centroids = kmeanspp_init(rows, k, rng);

    std::vector<size_t> assignment(n);
    std::vector<double> dist(n);
    for (size_t iter = 0; iter < max_iter; ++iter) {
        double inertia = 0.0;
        for (size_t i = 0; i < n; ++i) {
            assignment[i] = nearest_centroid(model.centroids, rows.row(i), dim, &dist[i]);
            inertia += dist[i];
        }
        model.inertia_history.push_back(inertia);
        model.inertia = inertia;

        Matrix next(k, dim);
        std::vector<size_t> counts(k, 0);
        for (size_t i = 0; i < n; ++i) {
            double* cr = next.row(assignment[i]);
            const double* r = rows.row(i);
            for (size_t c = 0; c < dim; ++c) cr[c] += r[c];
            ++counts[assignment[i]];
        }
        for (size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // Re-seed from the point farthest from its centroid.
                size_t far = static_cast<size_t>(
                    std::max_element(dist.begin(), dist.end()) - dist.begin());
                std::copy(rows.row(far), rows.row(far) + dim, next.row(c));
                dist[far] = 0.0;
                continue;
            }
            double inv = 1.0 / static_cast<double>(counts[c]);
            double* cr = next.row(c);
            for (size_t d = 0; d < dim; ++d) cr[d] *= inv;
        }
        double max_shift = 0.0;
        for (size_t c = 0; c < k; ++c)
            max_shift = std::max(max_shift,
                                 std::sqrt(squared_distance(model.centroids.row(c), next.row(c), dim)));
        model.centroids = std::move(next);
        if (max_shift < tol) break;
    }
    // Final inertia under the final centroids.
    double inertia = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double d;
        nearest_centroid(model.centroids, rows.row(i), dim, &d);
        inertia += d;
    }
    model.inertia_history.push_back(inertia);
    model.inertia = inertia;
    return model;
}

namespace {

double log_gaussian_diag(const double* x, const double* mean, const double* var, size_t dim) {
    double ll = -0.5 * static_cast<double>(dim) * std::log(2.0 * 3.141592653589793);
    for (size_t d = 0; d < dim; ++d) {
        double diff = x[d] - mean[d];
        ll -= 0.5 * (std::log(var[d]) + diff * diff / var[d]);
    }
    return ll;
}

}  // namespace

std::vector<double> gmm_responsibilities(const GmmModel& gmm, const double* row, size_t dim) {
    size_t k = gmm.weights.size();
    std::vector<double> logp(k);
    double mx = -std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < k; ++c) {
        logp[c] = std::log(gmm.weights[c]) +
                  log_gaussian_diag(row, gmm.means.row(c), gmm.variances.row(c), dim);
        mx = std::max(mx, logp[c]);
    }
    double sum = 0.0;
    for (size_t c = 0; c < k; ++c) {
        logp[c] = std::exp(logp[c] - mx);
        sum += logp[c];
    }
    for (double& v : logp) v /= sum;
    return logp;
}

GmmModel fit_gmm(const Matrix& rows, size_t k, size_t em_iters, uint64_t seed) {
    size_t n = rows.rows(), dim = rows.cols();
    if (n < k) throw TooFewRows("fit_gmm: fewer rows than components");

    // Initialize from k-means: means = centroids, per-cluster diagonal
    // variances (floored), weights = cluster fractions.
    KMeansModel km = fit_kmeans(rows, k, seed);
    GmmModel gmm;
    gmm.means = km.centroids;
    gmm.variances = Matrix(k, dim, kGmmVarianceFloor);
    gmm.weights.assign(k, 0.0);
    {
        ClusterModel tmp;
        tmp.kind = ClusterKind::KMeans;
        tmp.k = k;
        tmp.kmeans = km;
        std::vector<int> assign = assign_clusters(tmp, rows);
        std::vector<size_t> counts(k, 0);
        Matrix ssq(k, dim);
        for (size_t i = 0; i < n; ++i) {
            size_t c = static_cast<size_t>(assign[i]);
            ++counts[c];
            for (size_t d = 0; d < dim; ++d) {
                double diff = rows.at(i, d) - gmm.means.at(c, d);
                ssq.at(c, d) += diff * diff;
            }
        }
        for (size_t c = 0; c < k; ++c) {
            gmm.weights[c] = std::max(static_cast<double>(counts[c]) / static_cast<double>(n),
                                      kGmmWeightFloor);
            for (size_t d = 0; d < dim; ++d)
                gmm.variances.at(c, d) =
                    std::max(counts[c] ? ssq.at(c, d) / static_cast<double>(counts[c])
                                       : kGmmVarianceFloor,
                             kGmmVarianceFloor);
        }
        double wsum = 0.0;
        for (double w : gmm.weights) wsum += w;
        for (double& w : gmm.weights) w /= wsum;
    }

    Matrix resp(n, k);
    for (size_t iter = 0; iter < em_iters; ++iter) {
        // E step, accumulating the observed-data log-likelihood.
        double loglik = 0.0;
        for (size_t i = 0; i < n; ++i) {
            std::vector<double> logp(k);
            double mx = -std::numeric_limits<double>::infinity();
            for (size_t c = 0; c < k; ++c) {
                logp[c] = std::log(gmm.weights[c]) +
                          log_gaussian_diag(rows.row(i), gmm.means.row(c), gmm.variances.row(c), dim);
                mx = std::max(mx, logp[c]);
            }
            double sum = 0.0;
            for (size_t c = 0; c < k; ++c) sum += std::exp(logp[c] - mx);
            loglik += mx + std::log(sum);
            for (size_t c = 0; c < k; ++c) resp.at(i, c) = std::exp(logp[c] - mx) / sum;
        }
        gmm.loglik_history.push_back(loglik);

        // M step.
        for (size_t c = 0; c < k; ++c) {
            double nc = 0.0;
            for (size_t i = 0; i < n; ++i) nc += resp.at(i, c);
            double weight = nc / static_cast<double>(n);
            if (weight < kGmmWeightFloor)
                throw DegenerateComponent("fit_gmm: component weight underflow");
            gmm.weights[c] = weight;
            for (size_t d = 0; d < dim; ++d) {
                double m = 0.0;
                for (size_t i = 0; i < n; ++i) m += resp.at(i, c) * rows.at(i, d);
                m /= nc;
                double v = 0.0;
                for (size_t i = 0; i < n; ++i) {
                    double diff = rows.at(i, d) - m;
                    v += resp.at(i, c) * diff * diff;
                }
                gmm.means.at(c, d) = m;
                gmm.variances.at(c, d) = std::max(v / nc, kGmmVarianceFloor);
            }
        }
    }
    return gmm;
}

ClusterModel fit_cluster_model(ClusterKind kind, const Matrix& rows, size_t k, uint64_t seed,
                               size_t kmeans_max_iter, double kmeans_tol, size_t em_iters) {
    ClusterModel model;
    model.kind = kind;
    model.k = k;
    if (kind == ClusterKind::KMeans)
        model.kmeans = fit_kmeans(rows, k, seed, kmeans_max_iter, kmeans_tol);
    else
        model.gmm = fit_gmm(rows, k, em_iters, seed);
    return model;
}

std::vector<int> assign_clusters(const ClusterModel& model, const Matrix& rows) {
    size_t dim = model.kind == ClusterKind::KMeans ? model.kmeans.centroids.cols()
                                                   : model.gmm.means.cols();
    if (rows.cols() != dim) throw DimensionMismatch("assign_clusters: row dimension mismatch");
    std::vector<int> out(rows.rows());
    for (size_t i = 0; i < rows.rows(); ++i) {
        if (model.kind == ClusterKind::KMeans) {
            out[i] = static_cast<int>(nearest_centroid(model.kmeans.centroids, rows.row(i), dim));
        } else {
            auto r = gmm_responsibilities(model.gmm, rows.row(i), dim);
            out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
        }
    }
    return out;
}

std::vector<uint8_t> encode_flow_clusters(const std::vector<int>& z, bool had_empty, size_t k) {
    std::vector<uint8_t> bits(k + 1, 0);
    for (int c : z) {
        if (c < 0 || static_cast<size_t>(c) >= k)
            throw IndexOutOfRange("encode_flow_clusters: cluster index out of range");
        bits[static_cast<size_t>(c)] = 1;
    }
    if (had_empty) bits[k] = 1;
    return bits;
}

}  // namespace termrec
