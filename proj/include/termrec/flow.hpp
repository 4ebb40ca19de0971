#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "termrec/pcap.hpp"

namespace termrec {

enum class TerminalType : int { Unlabeled = -1, LVRC = 0, TTU = 1, LMT = 2 };

inline constexpr int kTerminalTypes = 3;

const char* terminal_type_name(TerminalType t);
TerminalType terminal_type_from_name(const std::string& name);

// Canonical bidirectional five-tuple: (ip_a, port_a) <= (ip_b, port_b).
struct FlowKey {
    uint32_t ip_a = 0;
    uint16_t port_a = 0;
    uint32_t ip_b = 0;
    uint16_t port_b = 0;
    uint8_t protocol = 6;

    static FlowKey from_packet(const ParsedPacket& p);

    bool operator==(const FlowKey&) const = default;
    auto operator<=>(const FlowKey&) const = default;

    std::string to_string() const;  // "a.b.c.d:p-a.b.c.d:p"
};

struct Flow {
    FlowKey key;
    uint32_t initiator_ip = 0;  // "send" direction = packets from the initiator
    uint16_t initiator_port = 0;
    std::vector<ParsedPacket> packets;
    TerminalType label = TerminalType::Unlabeled;
    double start_ts = 0.0;
    double end_ts = 0.0;

    size_t packet_count() const { return packets.size(); }
    bool is_send(const ParsedPacket& p) const {
        return p.src_ip == initiator_ip && p.src_port == initiator_port;
    }
    bool saw_flag(uint8_t flag) const;
};

using FlowLabeler = std::function<TerminalType(const FlowKey&)>;

// Groups packets by canonical five-tuple; packets sorted by timestamp
// (stable, ties keep arrival order). Output flows ordered by first packet.
std::vector<Flow> assemble_flows(const std::vector<ParsedPacket>& packets,
                                 const FlowLabeler& labeler);

struct FilterStats {
    size_t total = 0;
    size_t kept = 0;
    size_t dropped = 0;
    double long_fraction = 0.0;
};

struct FilterResult {
    std::vector<Flow> kept;
    std::vector<Flow> dropped;
    FilterStats stats;
};

// A flow is SHORT when it both opens (SYN) and closes (FIN/RST) inside the
// capture, or when its duration is below min_duration. Everything else is LONG.
FilterResult filter_long_connections(std::vector<Flow> flows, double min_duration,
                                     double observation_window);

struct Segment {
    int index = 0;  // 0-based
    double window_start = 0.0;
    double window_end = 0.0;
    std::vector<const ParsedPacket*> packets;

    bool empty() const { return packets.empty(); }
    size_t count() const { return packets.size(); }
};

// Splits a flow into exactly L half-open windows [start + l*tau, start + (l+1)*tau)
// anchored to the global capture start. Packets past the last window are
// clamped into it; clamped_counter (when given) counts them.
std::vector<Segment> segment_flow(const Flow& flow, double capture_start, double tau, size_t L,
                                  size_t* clamped_counter = nullptr);

// Label map file: lines of "ip_address<TAB>terminal_type".
std::unordered_map<uint32_t, TerminalType> parse_label_map(const std::string& text);

// Labeler that looks up either endpoint of the key in an ip -> type map.
FlowLabeler labeler_from_map(std::unordered_map<uint32_t, TerminalType> map);

}  // namespace termrec
