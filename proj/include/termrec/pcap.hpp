#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "termrec/behavior.hpp"
#include "termrec/common.hpp"

namespace termrec {

namespace tcpflag {
inline constexpr uint8_t FIN = 0x01;
inline constexpr uint8_t SYN = 0x02;
inline constexpr uint8_t RST = 0x04;
inline constexpr uint8_t PSH = 0x08;
inline constexpr uint8_t ACK = 0x10;
}  // namespace tcpflag

inline constexpr uint32_t kLinkEthernet = 1;
inline constexpr uint32_t kLinkRawIpv4 = 101;

struct CaptureHeader {
    uint32_t magic = 0;
    uint16_t version_major = 0;
    uint16_t version_minor = 0;
    uint32_t snaplen = 0;
    uint32_t link_type = 0;
    bool big_endian = false;   // file byte order differs from the reader's LE view
    bool nanoseconds = false;  // timestamp fraction resolution
};

struct ParsedPacket {
    double timestamp = 0.0;  // seconds since epoch
    uint32_t src_ip = 0;
    uint32_t dst_ip = 0;
    uint16_t src_port = 0;
    uint16_t dst_port = 0;
    uint32_t payload_len = 0;  // application-layer (TCP payload) bytes
    uint8_t tcp_flags = 0;
    int behavior_code = kBehaviorZero;
    std::vector<uint8_t> payload;
};

struct RawRecord {
    double timestamp = 0.0;
    std::span<const uint8_t> bytes;
};

// Streaming reader over an in-memory classic PCAP file.
// One instance per file; instances are independent.
class PcapReader {
public:
    explicit PcapReader(std::span<const uint8_t> file_bytes);

    const CaptureHeader& header() const { return header_; }

    // Next record, or nullopt at clean end of file.
    // Throws TruncatedRecord when the file ends mid-record.
    std::optional<RawRecord> next();

private:
    uint32_t read_u32(size_t off) const;
    uint16_t read_u16(size_t off) const;

    std::span<const uint8_t> bytes_;
    CaptureHeader header_;
    size_t pos_ = 0;
};

struct IngestStats {
    size_t records = 0;
    size_t packets = 0;
    size_t skipped_non_ipv4 = 0;
    size_t skipped_non_tcp = 0;
    size_t malformed = 0;
};

// Decodes Ethernet/IPv4/TCP from one record. Returns nullopt (Skip) for
// non-IPv4 or non-TCP packets; throws MalformedPacket when declared lengths
// exceed the captured bytes.
std::optional<ParsedPacket> decode_packet(const RawRecord& record, uint32_t link_type,
                                          IngestStats* stats = nullptr);

// Full-file ingest: parse, decode, extract behavior codes. Malformed packets
// are counted and skipped; structural file errors propagate.
std::vector<ParsedPacket> ingest_pcap(std::span<const uint8_t> file_bytes,
                                      const BehaviorCodeTable& table, IngestStats& stats);

// Classic little-endian microsecond PCAP writer (link type 1).
class PcapWriter {
public:
    explicit PcapWriter(uint32_t snaplen = 65535, uint32_t link_type = kLinkEthernet);
    void add_record(double timestamp, std::span<const uint8_t> frame);
    const std::vector<uint8_t>& bytes() const { return out_; }

private:
    std::vector<uint8_t> out_;
    uint32_t snaplen_;
};

std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const uint8_t> bytes);
void write_file(const std::string& path, const std::string& text);

std::string ip_to_string(uint32_t ip);
uint32_t ip_from_string(const std::string& s);

}  // namespace termrec
