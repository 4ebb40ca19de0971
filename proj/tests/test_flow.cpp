#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "termrec/flow.hpp"

using namespace termrec;
using namespace testutil;

namespace {
constexpr uint32_t kA = 0x0a000002;
constexpr uint32_t kB = 0x0a000001;
}  // namespace

TEST_CASE("bidirectional packets merge into one flow with the initiator first") {
    std::vector<ParsedPacket> packets{
        make_packet(1.0, kA, 40001, kB, 2404, 10),
        make_packet(2.0, kB, 2404, kA, 40001, 20),
        make_packet(3.0, kA, 40001, kB, 2404, 30),
    };
    auto flows = assemble_flows(packets, nullptr);
    REQUIRE(flows.size() == 1);
    const Flow& f = flows[0];
    CHECK(f.packet_count() == 3);
    CHECK(f.initiator_ip == kA);
    CHECK(f.initiator_port == 40001);
    CHECK(f.is_send(packets[0]));
    CHECK_FALSE(f.is_send(packets[1]));
    CHECK(f.start_ts == 1.0);
    CHECK(f.end_ts == 3.0);
}

TEST_CASE("distinct ports produce distinct flows") {
    std::vector<ParsedPacket> packets{
        make_packet(1.0, kA, 40001, kB, 2404, 10),
        make_packet(2.0, kA, 40002, kB, 2404, 10),
    };
    auto flows = assemble_flows(packets, nullptr);
    CHECK(flows.size() == 2);
}

TEST_CASE("out-of-order input is sorted by timestamp") {
    std::vector<ParsedPacket> packets{
        make_packet(5.0, kA, 40001, kB, 2404, 10),
        make_packet(1.0, kB, 2404, kA, 40001, 20),
        make_packet(3.0, kA, 40001, kB, 2404, 30),
    };
    auto flows = assemble_flows(packets, nullptr);
    REQUIRE(flows.size() == 1);
    const Flow& f = flows[0];
    CHECK(std::is_sorted(f.packets.begin(), f.packets.end(),
                         [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; }));
    CHECK(f.initiator_ip == kB);  // earliest packet defines the send direction
}

TEST_CASE("flow key canonicalization is direction-independent") {
    auto p1 = make_packet(0.0, kA, 40001, kB, 2404, 0);
    auto p2 = make_packet(0.0, kB, 2404, kA, 40001, 0);
    CHECK(FlowKey::from_packet(p1) == FlowKey::from_packet(p2));
}

TEST_CASE("long-connection filter") {
    std::vector<ParsedPacket> long_pkts{
        make_packet(0.0, kA, 40001, kB, 2404, 10),
        make_packet(3600.0, kB, 2404, kA, 40001, 10),
    };
    std::vector<ParsedPacket> short_pkts{
        make_packet(0.0, kA, 40002, kB, 2404, 0, tcpflag::SYN),
        make_packet(4.0, kA, 40002, kB, 2404, 0, tcpflag::FIN | tcpflag::ACK),
    };
    std::vector<ParsedPacket> brief_pkts{
        make_packet(0.0, kA, 40003, kB, 2404, 10),
        make_packet(100.0, kA, 40003, kB, 2404, 10),
    };
    std::vector<ParsedPacket> all = long_pkts;
    all.insert(all.end(), short_pkts.begin(), short_pkts.end());
    all.insert(all.end(), brief_pkts.begin(), brief_pkts.end());

    auto flows = assemble_flows(all, nullptr);
    auto result = filter_long_connections(std::move(flows), 600.0, 3600.0);
    CHECK(result.stats.total == 3);
    CHECK(result.stats.kept == 1);     // no SYN, spans the window
    CHECK(result.stats.dropped == 2);  // SYN..FIN and sub-min-duration
    CHECK(result.stats.long_fraction == doctest::Approx(1.0 / 3.0));
    REQUIRE(result.kept.size() == 1);
    CHECK(result.kept[0].key.port_b == 40001);
}

TEST_CASE("segmentation aligns to the capture start with half-open windows") {
    std::vector<ParsedPacket> packets{
        make_packet(5.0, kA, 40001, kB, 2404, 10),
        make_packet(300.0, kA, 40001, kB, 2404, 10),   // boundary -> segment 1
        make_packet(305.0, kB, 2404, kA, 40001, 10),
        make_packet(3700.0, kA, 40001, kB, 2404, 10),  // past L*tau -> clamped
    };
    auto flows = assemble_flows(packets, nullptr);
    REQUIRE(flows.size() == 1);
    size_t clamped = 0;
    auto segments = segment_flow(flows[0], 0.0, 300.0, 12, &clamped);
    REQUIRE(segments.size() == 12);
    CHECK(segments[0].count() == 1);
    CHECK(segments[1].count() == 2);
    CHECK(segments[11].count() == 1);
    CHECK(clamped == 1);

    size_t total = 0;
    for (const auto& seg : segments) total += seg.count();
    CHECK(total == flows[0].packet_count());

    CHECK(segments[1].window_start == 300.0);
    CHECK(segments[1].window_end == 600.0);
}

TEST_CASE("empty segments are legal") {
    std::vector<ParsedPacket> packets{make_packet(10.0, kA, 40001, kB, 2404, 10)};
    auto flows = assemble_flows(packets, nullptr);
    auto segments = segment_flow(flows[0], 0.0, 300.0, 12);
    CHECK(segments[0].count() == 1);
    for (size_t i = 1; i < 12; ++i) CHECK(segments[i].empty());
}

TEST_CASE("segmentation rejects bad parameters") {
    std::vector<ParsedPacket> packets{make_packet(0.0, kA, 40001, kB, 2404, 0)};
    auto flows = assemble_flows(packets, nullptr);
    CHECK_THROWS_AS(segment_flow(flows[0], 0.0, 0.0, 12), InvalidParams);
    CHECK_THROWS_AS(segment_flow(flows[0], 0.0, -1.0, 12), InvalidParams);
    CHECK_THROWS_AS(segment_flow(flows[0], 0.0, 300.0, 0), InvalidParams);
}

TEST_CASE("label map parsing and lookup by either endpoint") {
    auto map = parse_label_map("10.0.0.2\tLVRC\n10.0.0.9\tTTU\n");
    REQUIRE(map.size() == 2);
    auto labeler = labeler_from_map(map);

    auto p = make_packet(0.0, kB, 2404, kA, 40001, 0);  // terminal is the b side here
    CHECK(labeler(FlowKey::from_packet(p)) == TerminalType::LVRC);

    auto q = make_packet(0.0, 0x0a000063, 1, 0x0a000064, 2, 0);
    CHECK(labeler(FlowKey::from_packet(q)) == TerminalType::Unlabeled);
}

TEST_CASE("assembly is permutation-invariant up to timestamp ties") {
    std::vector<ParsedPacket> packets;
    for (int i = 0; i < 10; ++i)
        packets.push_back(make_packet(i * 7.0, i % 2 ? kA : kB, i % 2 ? 40001 : 2404,
                                      i % 2 ? kB : kA, i % 2 ? 2404 : 40001, 10 + i));
    auto flows_a = assemble_flows(packets, nullptr);
    std::reverse(packets.begin(), packets.end());
    auto flows_b = assemble_flows(packets, nullptr);
    REQUIRE(flows_a.size() == flows_b.size());
    REQUIRE(flows_a.size() == 1);
    REQUIRE(flows_a[0].packet_count() == flows_b[0].packet_count());
    for (size_t i = 0; i < flows_a[0].packets.size(); ++i)
        CHECK(flows_a[0].packets[i].timestamp == flows_b[0].packets[i].timestamp);
}
