#include "termrec/flow.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace termrec {

const char* terminal_type_name(TerminalType t) {
    switch (t) {
        case TerminalType::LVRC: return "LVRC";
        case TerminalType::TTU: return "TTU";
        case TerminalType::LMT: return "LMT";
        default: return "UNLABELED";
    }
}

TerminalType terminal_type_from_name(const std::string& name) {
    if (name == "LVRC") return TerminalType::LVRC;
    if (name == "TTU") return TerminalType::TTU;
    if (name == "LMT") return TerminalType::LMT;
    if (name == "UNLABELED") return TerminalType::Unlabeled;
    throw ConfigError("unknown terminal type: " + name);
}

FlowKey FlowKey::from_packet(const ParsedPacket& p) {
    FlowKey k;
    k.protocol = 6;
    if (std::tie(p.src_ip, p.src_port) <= std::tie(p.dst_ip, p.dst_port)) {
        k.ip_a = p.src_ip; k.port_a = p.src_port;
        k.ip_b = p.dst_ip; k.port_b = p.dst_port;
    } else {
        k.ip_a = p.dst_ip; k.port_a = p.dst_port;
        k.ip_b = p.src_ip; k.port_b = p.src_port;
    }
    return k;
}

std::string FlowKey::to_string() const {
    std::ostringstream s;
    s << ip_to_string(ip_a) << ':' << port_a << '-' << ip_to_string(ip_b) << ':' << port_b;
    return s.str();
}

bool Flow::saw_flag(uint8_t flag) const {
    for (const auto& p : packets)
        if (p.tcp_flags & flag) return true;
    return false;
}

std::vector<Flow> assemble_flows(const std::vector<ParsedPacket>& packets,
                                 const FlowLabeler& labeler) {
    // std::map keeps iteration deterministic regardless of input order.
    std::map<FlowKey, Flow> by_key;
    for (const auto& p : packets) {
        FlowKey key = FlowKey::from_packet(p);
        auto [it, inserted] = by_key.try_emplace(key);
        if (inserted) it->second.key = key;
        it->second.packets.push_back(p);
    }
    std::vector<Flow> flows;
    flows.reserve(by_key.size());
    for (auto& [key, flow] : by_key) {
        std::stable_sort(flow.packets.begin(), flow.packets.end(),
                         [](const ParsedPacket& a, const ParsedPacket& b) {
                             return a.timestamp < b.timestamp;
                         });
        const ParsedPacket& first = flow.packets.front();
        flow.initiator_ip = first.src_ip;
        flow.initiator_port = first.src_port;
        flow.start_ts = first.timestamp;
        flow.end_ts = flow.packets.back().timestamp;
        if (labeler) flow.label = labeler(key);
        flows.push_back(std::move(flow));
    }
    std::sort(flows.begin(), flows.end(), [](const Flow& a, const Flow& b) {
        if (a.start_ts != b.start_ts) return a.start_ts < b.start_ts;
        return a.key < b.key;
    });
    return flows;
}

FilterResult filter_long_connections(std::vector<Flow> flows, double min_duration,
                                     double /*observation_window*/) {
    FilterResult result;
    result.stats.total = flows.size();
    for (auto& flow : flows) {
        bool opens = flow.saw_flag(tcpflag::SYN);
        bool closes = flow.saw_flag(tcpflag::FIN) || flow.saw_flag(tcpflag::RST);
        double duration = flow.end_ts - flow.start_ts;
        bool is_short = (opens && closes) || duration < min_duration;
        if (is_short)
            result.dropped.push_back(std::move(flow));
        else
            result.kept.push_back(std::move(flow));
    }
    result.stats.kept = result.kept.size();
    result.stats.dropped = result.dropped.size();
    result.stats.long_fraction =
        result.stats.total ? static_cast<double>(result.stats.kept) / result.stats.total : 0.0;
    return result;
}

std::vector<Segment> segment_flow(const Flow& flow, double capture_start, double tau, size_t L,
                                  size_t* clamped_counter) {
    if (tau <= 0.0 || L == 0) throw InvalidParams("segment_flow: tau must be > 0 and L >= 1");
    std::vector<Segment> segments(L);
    for (size_t l = 0; l < L; ++l) {
        segments[l].index = static_cast<int>(l);
        segments[l].window_start = capture_start + static_cast<double>(l) * tau;
        segments[l].window_end = capture_start + static_cast<double>(l + 1) * tau;
    }
    for (const auto& p : flow.packets) {
        double rel = p.timestamp - capture_start;
        long idx = static_cast<long>(std::floor(rel / tau));
        if (idx < 0) idx = 0;
        if (idx >= static_cast<long>(L)) {
            idx = static_cast<long>(L) - 1;
            if (clamped_counter) ++*clamped_counter;
        }
        segments[static_cast<size_t>(idx)].packets.push_back(&p);
    }
    return segments;
}

std::unordered_map<uint32_t, TerminalType> parse_label_map(const std::string& text) {
    std::unordered_map<uint32_t, TerminalType> map;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        size_t tab = line.find('\t');
        if (tab == std::string::npos) throw ConfigError("label map: expected ip<TAB>type");
        std::string type = line.substr(tab + 1);
        if (!type.empty() && type.back() == '\r') type.pop_back();
        map[ip_from_string(line.substr(0, tab))] = terminal_type_from_name(type);
    }
    return map;
}

FlowLabeler labeler_from_map(std::unordered_map<uint32_t, TerminalType> map) {
    return [map = std::move(map)](const FlowKey& key) {
        if (auto it = map.find(key.ip_a); it != map.end()) return it->second;
        if (auto it = map.find(key.ip_b); it != map.end()) return it->second;
        return TerminalType::Unlabeled;
    };
}

}  // namespace termrec
