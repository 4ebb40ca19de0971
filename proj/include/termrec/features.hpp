#pragma once

#include <array>
#include <string>
#include <vector>

#include "termrec/flow.hpp"

namespace termrec {

inline constexpr size_t kFlowFeatureDim = 16;     // D, and segment-level P
inline constexpr size_t kBehaviorFeatureDim = 30; // Q = 14 states x 2 dirs + ZERO x 2

extern const std::array<const char*, kFlowFeatureDim> kFlowFeatureNames;

// Canonical behavioral column names: <STATE>_send / <STATE>_recv pairs for
// the 14 states, then ZERO_send, ZERO_recv.
std::vector<std::string> behavior_feature_names();

// Index into a 30-dim behavioral vector. state in [0, 14], 0 = ZERO.
size_t behavior_feature_index(int state, bool send);

using FlowFeatureVector = std::array<double, kFlowFeatureDim>;
using SegmentBehaviorVector = std::array<double, kBehaviorFeatureDim>;

// The 16 Table-style statistics over a set of packets, with direction given
// by the owning flow's initiator.
FlowFeatureVector packet_statistics(const std::vector<const ParsedPacket*>& packets,
                                    const Flow& flow);

FlowFeatureVector flow_features(const Flow& flow);

struct SegmentFeatures {
    FlowFeatureVector tf{};        // statistical, all-zero when empty
    SegmentBehaviorVector bf{};    // behavior-state counts per direction
    bool empty = false;
};

SegmentFeatures segment_features(const Segment& segment, const Flow& flow);

// Per-dimension mean/std scaler, fitted on training rows only.
// Zero-variance dimensions pass through unscaled.
struct Standardizer {
    std::vector<double> mu;
    std::vector<double> sigma;

    size_t fitted_dim() const { return mu.size(); }

    static Standardizer fit(const Matrix& rows);
    Matrix apply(const Matrix& rows) const;
    void apply_row(const double* in, double* out) const;
};

// Delimited-text export with a header row naming every dimension.
std::string feature_matrix_tsv(const Matrix& rows, const std::vector<std::string>& names,
                               const std::vector<std::string>& row_ids = {});

}  // namespace termrec
