#include "termrec/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "termrec/rng.hpp"

namespace termrec {

namespace {

std::array<double, kBehaviorStates> make_mixture(std::initializer_list<std::pair<int, double>> heavy) {
    std::array<double, kBehaviorStates> mix;
    mix.fill(0.01);  // small floor so every state can occur
    for (auto [state, weight] : heavy) mix[static_cast<size_t>(state - 1)] = weight;
    double sum = 0.0;
    for (double v : mix) sum += v;
    for (double& v : mix) v /= sum;
    return mix;
}

// State indices: 1-2 Test, 3 Write, 4 Identification, 5-10 Read,
// 11-13 Transport, 14 Individuation.
std::array<double, kBehaviorStates> read_heavy() {
    return make_mixture({{5, 0.30}, {6, 0.20}, {7, 0.12}, {8, 0.12}, {9, 0.08}, {10, 0.06}});
}
std::array<double, kBehaviorStates> transport_heavy() {
    return make_mixture({{11, 0.40}, {12, 0.25}, {13, 0.20}, {4, 0.04}});
}
std::array<double, kBehaviorStates> command_heavy() {
    return make_mixture({{1, 0.25}, {2, 0.20}, {3, 0.30}, {14, 0.12}});
}

}  // namespace

std::vector<ArchetypeProfile> archetype_profiles(bool hard_mode) {
    std::vector<ArchetypeProfile> profiles(3);
    profiles[0].name = "LVRC";
    profiles[0].type = TerminalType::LVRC;
    profiles[1].name = "TTU";
    profiles[1].type = TerminalType::TTU;
    profiles[2].name = "LMT";
    profiles[2].type = TerminalType::LMT;

    if (hard_mode) {
        // Disjoint phase-shifted schedules with identical rates, sizes and
        // direction mix; only the behavior-state mixtures separate classes.
        for (int c = 0; c < 3; ++c) {
            auto& p = profiles[static_cast<size_t>(c)];
            p.active_segments = {c, c + 3, c + 6, c + 9};
            p.rate_mean = 60.0;
            p.rate_jitter = 8.0;
            p.size_mean = 300.0;
            p.size_std = 60.0;
            p.size_min = 64;
            p.size_max = 900;
            p.send_ratio = 0.5;
        }
        profiles[0].behavior_mix_send = profiles[0].behavior_mix_recv = read_heavy();
        profiles[1].behavior_mix_send = profiles[1].behavior_mix_recv = transport_heavy();
        profiles[2].behavior_mix_send = profiles[2].behavior_mix_recv = command_heavy();
        return profiles;
    }

    // Meter-reading concentrator: periodic bursts every 900 s, read-heavy.
    profiles[0].active_segments = {0, 3, 6, 9};
    profiles[0].rate_mean = 60.0;
    profiles[0].rate_jitter = 10.0;
    profiles[0].size_mean = 400.0;
    profiles[0].size_std = 80.0;
    profiles[0].size_min = 64;
    profiles[0].size_max = 1000;
    profiles[0].send_ratio = 0.6;
    profiles[0].behavior_mix_send = profiles[0].behavior_mix_recv = read_heavy();

    // Transformer telemetry: quasi-constant low rate, transport-heavy.
    profiles[1].active_segments = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    profiles[1].rate_mean = 15.0;
    profiles[1].rate_jitter = 4.0;
    profiles[1].size_mean = 120.0;
    profiles[1].size_std = 30.0;
    profiles[1].size_min = 16;
    profiles[1].size_max = 400;
    profiles[1].send_ratio = 0.5;
    profiles[1].behavior_mix_send = profiles[1].behavior_mix_recv = transport_heavy();

    // Load management: sparse command/response exchanges, write/test-heavy.
    profiles[2].active_segments = {2, 3, 6, 7, 10};
    profiles[2].rate_mean = 8.0;
    profiles[2].rate_jitter = 2.0;
    profiles[2].size_mean = 800.0;
    profiles[2].size_std = 150.0;
    profiles[2].size_min = 200;
    profiles[2].size_max = 1200;
    profiles[2].send_ratio = 0.45;
    profiles[2].behavior_mix_send = profiles[2].behavior_mix_recv = command_heavy();
    return profiles;
}

std::vector<GeneratedPacket> generate_flow(const ArchetypeProfile& profile,
                                           const GeneratorConfig& cfg, uint64_t flow_seed) {
    if (profile.size_max < profile.size_min || profile.send_ratio < 0.0 ||
        profile.send_ratio > 1.0)
        throw BadProfile("generate_flow: inconsistent profile");
    Rng rng = Rng::derive(cfg.seed, flow_seed);
    std::vector<GeneratedPacket> packets;
    uint64_t tau_us = static_cast<uint64_t>(cfg.tau * 1e6);
    std::vector<double> mix_send(profile.behavior_mix_send.begin(), profile.behavior_mix_send.end());
    std::vector<double> mix_recv(profile.behavior_mix_recv.begin(), profile.behavior_mix_recv.end());

    for (int seg : profile.active_segments) {
        if (seg < 0 || static_cast<size_t>(seg) >= cfg.segments)
            throw BadProfile("generate_flow: active segment out of range");
        long count = std::lround(rng.normal(profile.rate_mean, profile.rate_jitter));
        if (count < 0) count = 0;
        uint64_t seg_start = static_cast<uint64_t>(seg) * tau_us;
        for (long i = 0; i < count; ++i) {
            GeneratedPacket p;
            p.ts_usec = seg_start + rng.uniform_int(tau_us);
            p.terminal_sends = rng.uniform() < profile.send_ratio;
            double size = rng.normal(profile.size_mean, profile.size_std);
            uint32_t lo = std::max<uint32_t>(profile.size_min, 1);
            p.payload_len = static_cast<uint32_t>(
                std::clamp(size, static_cast<double>(lo), static_cast<double>(profile.size_max)));
            p.behavior_state = static_cast<int>(
                rng.weighted_index(p.terminal_sends ? mix_send : mix_recv)) + 1;
            p.tcp_flags = tcpflag::ACK | tcpflag::PSH;
            packets.push_back(p);
        }
    }
    if (packets.empty()) {
        // Flows are never empty: one zero-payload keepalive mid-capture.
        GeneratedPacket keepalive;
        keepalive.ts_usec = static_cast<uint64_t>(cfg.capture_duration * 5e5);
        keepalive.terminal_sends = true;
        keepalive.tcp_flags = tcpflag::ACK;
        packets.push_back(keepalive);
    }
    std::sort(packets.begin(), packets.end(),
              [](const GeneratedPacket& a, const GeneratedPacket& b) { return a.ts_usec < b.ts_usec; });
    return packets;
}

namespace {

std::vector<GeneratedPacket> generate_short_flow(const GeneratorConfig& cfg, Rng& rng) {
    std::vector<GeneratedPacket> packets;
    double span = cfg.capture_duration - 120.0;
    uint64_t t0 = static_cast<uint64_t>(rng.uniform(10.0, span) * 1e6);
    uint64_t duration = static_cast<uint64_t>(rng.uniform(5.0, 40.0) * 1e6);
    size_t data_packets = 3 + rng.uniform_int(6);

    GeneratedPacket syn;
    syn.ts_usec = t0;
    syn.terminal_sends = true;
    syn.tcp_flags = tcpflag::SYN;
    packets.push_back(syn);
    for (size_t i = 0; i < data_packets; ++i) {
        GeneratedPacket p;
        p.ts_usec = t0 + rng.uniform_int(duration);
        p.terminal_sends = rng.uniform() < 0.5;
        p.payload_len = 32 + static_cast<uint32_t>(rng.uniform_int(200));
        p.behavior_state = static_cast<int>(rng.uniform_int(kBehaviorStates)) + 1;
        p.tcp_flags = tcpflag::ACK | tcpflag::PSH;
        packets.push_back(p);
    }
    GeneratedPacket fin;
    fin.ts_usec = t0 + duration;
    fin.terminal_sends = true;
    fin.tcp_flags = tcpflag::FIN | tcpflag::ACK;
    packets.push_back(fin);
    std::sort(packets.begin(), packets.end(),
              [](const GeneratedPacket& a, const GeneratedPacket& b) { return a.ts_usec < b.ts_usec; });
    return packets;
}

uint16_t ipv4_checksum(const uint8_t* header, size_t len) {
    uint32_t sum = 0;
    for (size_t i = 0; i + 1 < len; i += 2) sum += (header[i] << 8) | header[i + 1];
    while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
    return static_cast<uint16_t>(~sum);
}

std::vector<uint8_t> build_frame(uint32_t src_ip, uint32_t dst_ip, uint16_t src_port,
                                 uint16_t dst_port, uint32_t seq, uint8_t flags,
                                 const std::vector<uint8_t>& payload) {
    std::vector<uint8_t> frame;
    frame.reserve(54 + payload.size());
    // Ethernet: synthetic MACs, ethertype IPv4.
    const uint8_t eth[14] = {0x02, 0, 0, 0, 0, 0x01, 0x02, 0, 0, 0, 0, 0x02, 0x08, 0x00};
    frame.insert(frame.end(), eth, eth + 14);

    uint16_t total_len = static_cast<uint16_t>(20 + 20 + payload.size());
    uint8_t ip[20] = {};
    ip[0] = 0x45;
    ip[2] = static_cast<uint8_t>(total_len >> 8);
    ip[3] = static_cast<uint8_t>(total_len);
    ip[8] = 64;  // ttl
    ip[9] = 6;   // tcp
    ip[12] = static_cast<uint8_t>(src_ip >> 24);
    ip[13] = static_cast<uint8_t>(src_ip >> 16);
    ip[14] = static_cast<uint8_t>(src_ip >> 8);
    ip[15] = static_cast<uint8_t>(src_ip);
    ip[16] = static_cast<uint8_t>(dst_ip >> 24);
    ip[17] = static_cast<uint8_t>(dst_ip >> 16);
    ip[18] = static_cast<uint8_t>(dst_ip >> 8);
    ip[19] = static_cast<uint8_t>(dst_ip);
    uint16_t csum = ipv4_checksum(ip, 20);
    ip[10] = static_cast<uint8_t>(csum >> 8);
    ip[11] = static_cast<uint8_t>(csum);
    frame.insert(frame.end(), ip, ip + 20);

    uint8_t tcp[20] = {};
    tcp[0] = static_cast<uint8_t>(src_port >> 8);
    tcp[1] = static_cast<uint8_t>(src_port);
    tcp[2] = static_cast<uint8_t>(dst_port >> 8);
    tcp[3] = static_cast<uint8_t>(dst_port);
    tcp[4] = static_cast<uint8_t>(seq >> 24);
    tcp[5] = static_cast<uint8_t>(seq >> 16);
    tcp[6] = static_cast<uint8_t>(seq >> 8);
    tcp[7] = static_cast<uint8_t>(seq);
    tcp[12] = 0x50;  // data offset 5
    tcp[13] = flags;
    tcp[14] = 0x20;  // window
    frame.insert(frame.end(), tcp, tcp + 20);
    frame.insert(frame.end(), payload.begin(), payload.end());
    return frame;
}

struct PendingPacket {
    uint64_t ts_usec;
    size_t flow_index;
    size_t order;  // position within the flow, for stable merge
    GeneratedPacket pkt;
};

}  // namespace

Dataset generate_dataset(const GeneratorConfig& cfg, const BehaviorCodeTable& table,
                         const std::string& config_header) {
    if (cfg.flows_per_class == 0 || cfg.tau <= 0 || cfg.segments == 0 ||
        cfg.long_fraction <= 0.0 || cfg.long_fraction > 1.0)
        throw BadProfile("generate_dataset: invalid config");

    auto profiles = archetype_profiles(cfg.hard_mode);
    size_t long_total = 3 * cfg.flows_per_class;
    size_t short_total = static_cast<size_t>(
        std::lround(static_cast<double>(long_total) * (1.0 - cfg.long_fraction) / cfg.long_fraction));

    struct FlowPlan {
        TerminalType label;
        bool is_long;
        uint32_t terminal_ip;
        uint16_t terminal_port;
        std::vector<GeneratedPacket> packets;
    };
    std::vector<FlowPlan> plans;
    size_t flow_index = 0;
    auto next_endpoint = [&flow_index]() {
        uint32_t ip = 0x0a010000u + static_cast<uint32_t>((flow_index / 250) * 256 + flow_index % 250 + 1);
        uint16_t port = static_cast<uint16_t>(40000 + flow_index % 20000);
        ++flow_index;
        return std::pair<uint32_t, uint16_t>(ip, port);
    };

    for (const auto& profile : profiles) {
        for (size_t i = 0; i < cfg.flows_per_class; ++i) {
            FlowPlan plan;
            plan.label = profile.type;
            plan.is_long = true;
            std::tie(plan.terminal_ip, plan.terminal_port) = next_endpoint();
            plan.packets = generate_flow(profile, cfg, flow_index);
            plans.push_back(std::move(plan));
        }
    }
    Rng short_rng = Rng::derive(cfg.seed, 0x73686f7274ULL);  // distinct stream for short flows
    for (size_t i = 0; i < short_total; ++i) {
        FlowPlan plan;
        plan.label = static_cast<TerminalType>(i % 3);
        plan.is_long = false;
        std::tie(plan.terminal_ip, plan.terminal_port) = next_endpoint();
        plan.packets = generate_short_flow(cfg, short_rng);
        plans.push_back(std::move(plan));
    }

    // Global timestamp-ordered merge with strictly increasing microseconds.
    std::vector<PendingPacket> merged;
    for (size_t f = 0; f < plans.size(); ++f)
        for (size_t i = 0; i < plans[f].packets.size(); ++i)
            merged.push_back({plans[f].packets[i].ts_usec, f, i, plans[f].packets[i]});
    std::sort(merged.begin(), merged.end(), [](const PendingPacket& a, const PendingPacket& b) {
        if (a.ts_usec != b.ts_usec) return a.ts_usec < b.ts_usec;
        if (a.flow_index != b.flow_index) return a.flow_index < b.flow_index;
        return a.order < b.order;
    });
    uint64_t prev = 0;
    bool first = true;
    for (auto& m : merged) {
        if (!first && m.ts_usec <= prev) m.ts_usec = prev + 1;
        prev = m.ts_usec;
        first = false;
    }

    PcapWriter writer;
    std::vector<uint32_t> seq(plans.size(), 1000);
    uint64_t capture_start_us = static_cast<uint64_t>(cfg.capture_start * 1e6);
    for (const auto& m : merged) {
        const FlowPlan& plan = plans[m.flow_index];
        std::vector<uint8_t> payload(m.pkt.payload_len, 0);
        if (m.pkt.behavior_state != kBehaviorZero) {
            if (payload.size() <= table.offset) payload.resize(table.offset + 1, 0);
            payload[table.offset] = table.code_for_state(m.pkt.behavior_state);
        }
        uint32_t src_ip = m.pkt.terminal_sends ? plan.terminal_ip : kMasterIp;
        uint32_t dst_ip = m.pkt.terminal_sends ? kMasterIp : plan.terminal_ip;
        uint16_t src_port = m.pkt.terminal_sends ? plan.terminal_port : kMasterPort;
        uint16_t dst_port = m.pkt.terminal_sends ? kMasterPort : plan.terminal_port;
        auto frame = build_frame(src_ip, dst_ip, src_port, dst_port, seq[m.flow_index], m.pkt.tcp_flags,
                                 payload);
        seq[m.flow_index] += static_cast<uint32_t>(payload.size()) + 1;
        uint64_t abs_us = capture_start_us + m.ts_usec;
        writer.add_record(static_cast<double>(abs_us / 1000000) +
                              static_cast<double>(abs_us % 1000000) * 1e-6,
                          frame);
    }

    // Manifest: per-flow schedule realized as packet counts per segment.
    Dataset ds;
    ds.pcap_bytes = writer.bytes();
    uint64_t tau_us = static_cast<uint64_t>(cfg.tau * 1e6);
    std::map<std::string, ManifestEntry> entries;  // ordered by flow id
    std::map<size_t, std::string> flow_ids;
    for (size_t f = 0; f < plans.size(); ++f) {
        ParsedPacket probe;
        probe.src_ip = plans[f].terminal_ip;
        probe.src_port = plans[f].terminal_port;
        probe.dst_ip = kMasterIp;
        probe.dst_port = kMasterPort;
        std::string id = FlowKey::from_packet(probe).to_string();
        flow_ids[f] = id;
        ManifestEntry entry;
        entry.flow_id = id;
        entry.label = plans[f].label;
        entry.is_long = plans[f].is_long;
        entry.segment_counts.assign(cfg.segments, 0);
        entries[id] = std::move(entry);
    }
    for (const auto& m : merged) {
        ManifestEntry& entry = entries[flow_ids[m.flow_index]];
        ++entry.packet_count;
        size_t seg = std::min(static_cast<size_t>(m.ts_usec / tau_us), cfg.segments - 1);
        ++entry.segment_counts[seg];
    }

    std::ostringstream labels, manifest;
    if (!config_header.empty()) {
        labels << config_header;
        manifest << config_header;
    }
    manifest << "# termrec-manifest v1\n";
    manifest << "# columns: flow_id class connection packet_count segment_counts\n";
    for (size_t f = 0; f < plans.size(); ++f)
        labels << ip_to_string(plans[f].terminal_ip) << '\t' << terminal_type_name(plans[f].label)
               << '\n';
    for (const auto& [id, entry] : entries) {
        manifest << id << '\t' << terminal_type_name(entry.label) << '\t'
                 << (entry.is_long ? "long" : "short") << '\t' << entry.packet_count << '\t';
        for (size_t s = 0; s < entry.segment_counts.size(); ++s)
            manifest << entry.segment_counts[s] << (s + 1 < entry.segment_counts.size() ? ',' : '\n');
        ds.manifest.push_back(entry);
    }
    ds.label_map_text = labels.str();
    ds.manifest_text = manifest.str();
    return ds;
}

std::vector<ManifestEntry> parse_manifest(const std::string& text) {
    std::vector<ManifestEntry> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        ManifestEntry e;
        std::string label, kind, counts;
        if (!(row >> e.flow_id >> label >> kind >> e.packet_count >> counts))
            throw ConfigError("manifest: bad row: " + line);
        e.label = terminal_type_from_name(label);
        e.is_long = kind == "long";
        std::istringstream cs(counts);
        std::string tok;
        while (std::getline(cs, tok, ',')) e.segment_counts.push_back(std::stoul(tok));
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace termrec
