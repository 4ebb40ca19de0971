#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "termrec/behavior.hpp"
#include "termrec/flow.hpp"
#include "termrec/pcap.hpp"

namespace termrec {

// Per-class traffic shape: which segments carry packets, how many, how big,
// and which behavior states they use per direction.
struct ArchetypeProfile {
    std::string name;
    TerminalType type = TerminalType::Unlabeled;
    std::vector<int> active_segments;
    double rate_mean = 0.0;    // packets per active segment
    double rate_jitter = 0.0;
    double size_mean = 0.0;    // payload bytes
    double size_std = 0.0;
    uint32_t size_min = 0;
    uint32_t size_max = 0;
    std::array<double, kBehaviorStates> behavior_mix_send{};
    std::array<double, kBehaviorStates> behavior_mix_recv{};
    double send_ratio = 0.5;
};

struct GeneratorConfig {
    uint64_t seed = 9;
    size_t flows_per_class = 100;
    double capture_duration = 3600.0;
    double tau = 300.0;
    size_t segments = 12;
    double long_fraction = 0.86;
    bool hard_mode = false;
    double capture_start = 1609751460.0;  // arbitrary fixed epoch anchor
};

// Default easy-mode archetypes: distinct rhythms, rates and sizes.
// Hard-mode archetypes: phase-shifted disjoint schedules with identical
// rates/sizes per class; class signal lives in the behavior-state mixtures.
std::vector<ArchetypeProfile> archetype_profiles(bool hard_mode);

struct GeneratedPacket {
    uint64_t ts_usec = 0;  // relative to capture start
    bool terminal_sends = true;
    uint32_t payload_len = 0;
    uint8_t tcp_flags = 0;
    int behavior_state = kBehaviorZero;
};

// One TCP conversation between a terminal and the master station.
// Deterministic under the seed. Packets are time-ordered.
std::vector<GeneratedPacket> generate_flow(const ArchetypeProfile& profile,
                                           const GeneratorConfig& cfg, uint64_t flow_seed);

struct ManifestEntry {
    std::string flow_id;
    TerminalType label = TerminalType::Unlabeled;
    bool is_long = true;
    size_t packet_count = 0;
    std::vector<size_t> segment_counts;
};

struct Dataset {
    std::vector<uint8_t> pcap_bytes;
    std::string label_map_text;
    std::string manifest_text;
    std::vector<ManifestEntry> manifest;
};

// Full labeled capture: long flows per the class profiles plus enough short
// SYN..FIN flows to hit the configured long fraction. Byte-identical output
// for identical (seed, cfg).
Dataset generate_dataset(const GeneratorConfig& cfg, const BehaviorCodeTable& table,
                         const std::string& config_header = "");

std::vector<ManifestEntry> parse_manifest(const std::string& text);

inline constexpr uint32_t kMasterIp = 0x0a000001;  // 10.0.0.1
inline constexpr uint16_t kMasterPort = 2404;

}  // namespace termrec
