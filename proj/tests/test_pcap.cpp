#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "termrec/pcap.hpp"

using namespace termrec;
using namespace testutil;

TEST_CASE("empty big-endian capture yields an empty stream") {
    std::vector<uint8_t> file = pcap_header_be();
    PcapReader reader(file);
    CHECK(reader.header().big_endian);
    CHECK_FALSE(reader.header().nanoseconds);
    CHECK(reader.header().link_type == 1);
    CHECK(reader.header().version_major == 2);
    CHECK_FALSE(reader.next().has_value());
}

TEST_CASE("single 60-byte record round-trips through the reader") {
    std::vector<uint8_t> file = pcap_header_le(0xa1b2c3d4);
    std::vector<uint8_t> body(60, 0xab);
    append_record_le(file, 1700000000, 250000, body);
    PcapReader reader(file);
    auto rec = reader.next();
    REQUIRE(rec.has_value());
    CHECK(rec->bytes.size() == 60);
    CHECK(rec->timestamp == doctest::Approx(1700000000.25).epsilon(1e-9));
    CHECK_FALSE(reader.next().has_value());
}

TEST_CASE("nanosecond magic scales the fraction field") {
    std::vector<uint8_t> file = pcap_header_le(0xa1b23c4d);
    append_record_le(file, 10, 500000000, {0x00});
    PcapReader reader(file);
    CHECK(reader.header().nanoseconds);
    auto rec = reader.next();
    REQUIRE(rec.has_value());
    CHECK(rec->timestamp == doctest::Approx(10.5).epsilon(1e-12));
}

TEST_CASE("structural errors") {
    CHECK_THROWS_AS(PcapReader(pcap_header_le(0x00000000)), BadMagic);

    std::vector<uint8_t> tiny(10, 0);
    CHECK_THROWS_AS((void)PcapReader(std::span<const uint8_t>(tiny)), TruncatedHeader);

    std::vector<uint8_t> file = pcap_header_le(0xa1b2c3d4);
    file.push_back(0);  // 1 stray byte: not even a record header
    PcapReader r1(file);
    CHECK_THROWS_AS(r1.next(), TruncatedRecord);

    std::vector<uint8_t> file2 = pcap_header_le(0xa1b2c3d4);
    append_record_le(file2, 0, 0, std::vector<uint8_t>(40, 0));
    file2.resize(file2.size() - 10);  // record body cut short
    PcapReader r2(file2);
    CHECK_THROWS_AS(r2.next(), TruncatedRecord);
}

TEST_CASE("decode minimal TCP SYN with no payload") {
    auto frame = tcp_frame(0x0a000002, 40001, 0x0a000001, 2404, tcpflag::SYN, {});
    RawRecord rec{12.5, frame};
    auto pkt = decode_packet(rec, kLinkEthernet);
    REQUIRE(pkt.has_value());
    CHECK(pkt->payload_len == 0);
    CHECK(pkt->tcp_flags == tcpflag::SYN);
    CHECK(pkt->src_ip == 0x0a000002);
    CHECK(pkt->dst_ip == 0x0a000001);
    CHECK(pkt->src_port == 40001);
    CHECK(pkt->dst_port == 2404);
}

TEST_CASE("non-IPv4 and non-TCP frames are skipped with counters") {
    IngestStats stats;
    std::vector<uint8_t> arp(12, 0x02);
    put_u16be(arp, 0x0806);
    arp.resize(60, 0);
    CHECK_FALSE(decode_packet({0, arp}, kLinkEthernet, &stats).has_value());
    CHECK(stats.skipped_non_ipv4 == 1);

    auto udp = tcp_frame(1, 1, 2, 2, 0, {}, 17);
    CHECK_FALSE(decode_packet({0, udp}, kLinkEthernet, &stats).has_value());
    CHECK(stats.skipped_non_tcp == 1);
}

TEST_CASE("declared lengths past the captured bytes are malformed") {
    auto frame = tcp_frame(1, 1, 2, 2, 0, std::vector<uint8_t>(10, 0));
    frame[16] = 0x40;  // IPv4 total_length = 0x4000, way past capture
    frame[17] = 0x00;
    CHECK_THROWS_AS(decode_packet({0, frame}, kLinkEthernet), MalformedPacket);

    auto short_frame = tcp_frame(1, 1, 2, 2, 0, {});
    short_frame.resize(14 + 20 + 10);  // TCP header cut
    short_frame[16] = 0;
    short_frame[17] = 30;  // total_length matches truncated capture
    CHECK_THROWS_AS(decode_packet({0, short_frame}, kLinkEthernet), MalformedPacket);
}

TEST_CASE("ingest counts malformed packets and keeps going") {
    std::vector<uint8_t> file = pcap_header_le(0xa1b2c3d4);
    auto bad = tcp_frame(1, 1, 2, 2, 0, {});
    bad[16] = 0x40;
    bad[17] = 0x00;
    append_record_le(file, 0, 0, bad);
    append_record_le(file, 1, 0, tcp_frame(1, 5, 2, 6, tcpflag::ACK, {0x01}));
    IngestStats stats;
    auto packets = ingest_pcap(file, BehaviorCodeTable::default_table(), stats);
    CHECK(stats.records == 2);
    CHECK(stats.malformed == 1);
    REQUIRE(packets.size() == 1);
    CHECK(packets[0].behavior_code == 1);
}

TEST_CASE("behavior code extraction is total") {
    auto table = BehaviorCodeTable::default_table();
    CHECK(extract_behavior_code({}, table) == kBehaviorZero);

    std::vector<uint8_t> payload{5};
    CHECK(extract_behavior_code(payload, table) == 5);  // READ_REALTIME

    std::vector<uint8_t> unmapped{200};
    CHECK(extract_behavior_code(unmapped, table) == kBehaviorZero);

    BehaviorCodeTable offset_table = table;
    offset_table.offset = 4;
    std::vector<uint8_t> shorter{1, 2, 3};
    CHECK(extract_behavior_code(shorter, offset_table) == kBehaviorZero);
}

TEST_CASE("behavior table text round-trip") {
    auto table = BehaviorCodeTable::default_table();
    auto parsed = BehaviorCodeTable::parse(table.to_text());
    CHECK(parsed.offset == table.offset);
    CHECK(parsed.mapping == table.mapping);
    for (int state = 1; state <= kBehaviorStates; ++state)
        CHECK(parsed.mapping[table.code_for_state(state)] == state);
}

TEST_CASE("writer output re-parses with identical payloads and timestamps") {
    PcapWriter writer;
    std::vector<uint8_t> payload{0x03, 0xaa, 0xbb};
    auto frame = tcp_frame(0x0a000002, 40001, 0x0a000001, 2404, tcpflag::PSH | tcpflag::ACK,
                           payload);
    writer.add_record(1700000000.123456, frame);
    writer.add_record(1700000001.000001, frame);

    IngestStats stats;
    auto packets = ingest_pcap(writer.bytes(), BehaviorCodeTable::default_table(), stats);
    REQUIRE(packets.size() == 2);
    CHECK(packets[0].payload == payload);
    CHECK(packets[0].timestamp == doctest::Approx(1700000000.123456).epsilon(1e-9));
    CHECK(packets[1].timestamp == doctest::Approx(1700000001.000001).epsilon(1e-9));
    CHECK(packets[0].behavior_code == 3);  // WRITE_SET
}

TEST_CASE("raw IPv4 link type skips the ethernet header") {
    auto frame = tcp_frame(7, 1, 8, 2, tcpflag::ACK, {0x01});
    std::vector<uint8_t> raw(frame.begin() + 14, frame.end());
    auto pkt = decode_packet({0, raw}, kLinkRawIpv4);
    REQUIRE(pkt.has_value());
    CHECK(pkt->src_ip == 7);
    CHECK(pkt->payload_len == 1);
}
