#include "termrec/features.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace termrec {

const std::array<const char*, kFlowFeatureDim> kFlowFeatureNames = {
    "packet_count_send", "packet_count_recv", "count_ratio",
    "size_sum_send",     "size_sum_recv",
    "size_mean_send",    "size_mean_recv",
    "size_std_send",     "size_std_recv",
    "size_sum_ratio",
    "size_range_send",   "size_range_recv",
    "iat_mean_send",     "iat_mean_recv",
    "iat_std_send",      "iat_std_recv",
};

std::vector<std::string> behavior_feature_names() {
    std::vector<std::string> names;
    names.reserve(kBehaviorFeatureDim);
    for (int s = 1; s <= kBehaviorStates; ++s) {
        names.push_back(std::string(kBehaviorStateNames[static_cast<size_t>(s)]) + "_send");
        names.push_back(std::string(kBehaviorStateNames[static_cast<size_t>(s)]) + "_recv");
    }
    names.push_back("ZERO_send");
    names.push_back("ZERO_recv");
    return names;
}

size_t behavior_feature_index(int state, bool send) {
    if (state < 0 || state > kBehaviorStates) throw IndexOutOfRange("behavior state out of range");
    if (state == kBehaviorZero) return send ? 28 : 29;
    return static_cast<size_t>(2 * (state - 1)) + (send ? 0 : 1);
}

namespace {

struct DirStats {
    double count = 0, sum = 0, mean = 0, stddev = 0, range = 0, iat_mean = 0, iat_std = 0;
};

// Population statistics; degenerate cases (empty direction, < 2 packets for
// inter-arrival gaps) collapse to zero.
DirStats direction_stats(const std::vector<double>& sizes, const std::vector<double>& times) {
    DirStats d;
    d.count = static_cast<double>(sizes.size());
    if (sizes.empty()) return d;
    double mn = sizes[0], mx = sizes[0];
    for (double s : sizes) {
        d.sum += s;
        mn = std::min(mn, s);
        mx = std::max(mx, s);
    }
    d.mean = d.sum / d.count;
    d.range = mx - mn;
    double var = 0;
    for (double s : sizes) var += (s - d.mean) * (s - d.mean);
    d.stddev = std::sqrt(var / d.count);
    if (times.size() >= 2) {
        std::vector<double> gaps;
        gaps.reserve(times.size() - 1);
        for (size_t i = 1; i < times.size(); ++i) gaps.push_back(times[i] - times[i - 1]);
        double gsum = 0;
        for (double g : gaps) gsum += g;
        d.iat_mean = gsum / static_cast<double>(gaps.size());
        double gvar = 0;
        for (double g : gaps) gvar += (g - d.iat_mean) * (g - d.iat_mean);
        d.iat_std = std::sqrt(gvar / static_cast<double>(gaps.size()));
    }
    return d;
}

}  // namespace

FlowFeatureVector packet_statistics(const std::vector<const ParsedPacket*>& packets,
                                    const Flow& flow) {
    std::vector<double> send_sizes, recv_sizes, send_times, recv_times;
    for (const ParsedPacket* p : packets) {
        if (flow.is_send(*p)) {
            send_sizes.push_back(static_cast<double>(p->payload_len));
            send_times.push_back(p->timestamp);
        } else {
            recv_sizes.push_back(static_cast<double>(p->payload_len));
            recv_times.push_back(p->timestamp);
        }
    }
    DirStats snd = direction_stats(send_sizes, send_times);
    DirStats rcv = direction_stats(recv_sizes, recv_times);

    FlowFeatureVector f;
    f[0] = snd.count;
    f[1] = rcv.count;
    f[2] = snd.count / std::max(rcv.count, 1.0);
    f[3] = snd.sum;
    f[4] = rcv.sum;
    f[5] = snd.mean;
    f[6] = rcv.mean;
    f[7] = snd.stddev;
    f[8] = rcv.stddev;
    f[9] = snd.sum / std::max(rcv.sum, 1.0);
    f[10] = snd.range;
    f[11] = rcv.range;
    f[12] = snd.iat_mean;
    f[13] = rcv.iat_mean;
    f[14] = snd.iat_std;
    f[15] = rcv.iat_std;
    return f;
}

FlowFeatureVector flow_features(const Flow& flow) {
    if (flow.packets.empty()) throw EmptyInput("flow_features: flow has no packets");
    std::vector<const ParsedPacket*> ptrs;
    ptrs.reserve(flow.packets.size());
    for (const auto& p : flow.packets) ptrs.push_back(&p);
    return packet_statistics(ptrs, flow);
}

SegmentFeatures segment_features(const Segment& segment, const Flow& flow) {
    SegmentFeatures out;
    if (segment.empty()) {
        out.empty = true;
        return out;
    }
    out.tf = packet_statistics(segment.packets, flow);
    for (const ParsedPacket* p : segment.packets)
        out.bf[behavior_feature_index(p->behavior_code, flow.is_send(*p))] += 1.0;
    return out;
}

Standardizer Standardizer::fit(const Matrix& rows) {
    if (rows.rows() == 0) throw EmptyInput("Standardizer::fit: no rows");
    Standardizer s;
    size_t d = rows.cols();
    s.mu.assign(d, 0.0);
    s.sigma.assign(d, 0.0);
    double n = static_cast<double>(rows.rows());
    for (size_t r = 0; r < rows.rows(); ++r)
        for (size_t c = 0; c < d; ++c) s.mu[c] += rows.at(r, c);
    for (size_t c = 0; c < d; ++c) s.mu[c] /= n;
    for (size_t r = 0; r < rows.rows(); ++r)
        for (size_t c = 0; c < d; ++c) {
            double diff = rows.at(r, c) - s.mu[c];
            s.sigma[c] += diff * diff;
        }
    for (size_t c = 0; c < d; ++c) s.sigma[c] = std::sqrt(s.sigma[c] / n);
    return s;
}

void Standardizer::apply_row(const double* in, double* out) const {
    for (size_t c = 0; c < mu.size(); ++c) {
        double s = sigma[c] > 0.0 ? sigma[c] : 1.0;
        out[c] = (in[c] - mu[c]) / s;
    }
}

Matrix Standardizer::apply(const Matrix& rows) const {
    if (rows.cols() != fitted_dim())
        throw DimensionMismatch("Standardizer::apply: column count mismatch");
    Matrix out(rows.rows(), rows.cols());
    for (size_t r = 0; r < rows.rows(); ++r) apply_row(rows.row(r), out.row(r));
    return out;
}

std::string feature_matrix_tsv(const Matrix& rows, const std::vector<std::string>& names,
                               const std::vector<std::string>& row_ids) {
    if (names.size() != rows.cols())
        throw DimensionMismatch("feature_matrix_tsv: header/column mismatch");
    std::ostringstream out;
    out.precision(17);
    if (!row_ids.empty()) out << "id\t";
    for (size_t c = 0; c < names.size(); ++c) out << names[c] << (c + 1 < names.size() ? '\t' : '\n');
    for (size_t r = 0; r < rows.rows(); ++r) {
        if (!row_ids.empty()) out << row_ids[r] << '\t';
        for (size_t c = 0; c < rows.cols(); ++c)
            out << rows.at(r, c) << (c + 1 < rows.cols() ? '\t' : '\n');
    }
    return out.str();
}

}  // namespace termrec
