#pragma once

#include <cstdint>
#include <vector>

#include "termrec/pcap.hpp"

namespace testutil {

inline void put_u32le(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(static_cast<uint8_t>(x));
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x >> 16));
    v.push_back(static_cast<uint8_t>(x >> 24));
}

inline void put_u32be(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(static_cast<uint8_t>(x >> 24));
    v.push_back(static_cast<uint8_t>(x >> 16));
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x));
}

inline void put_u16be(std::vector<uint8_t>& v, uint16_t x) {
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x));
}

// 24-byte classic pcap global header, little-endian fields.
inline std::vector<uint8_t> pcap_header_le(uint32_t magic, uint32_t link_type = 1) {
    std::vector<uint8_t> v;
    put_u32le(v, magic);
    v.push_back(2); v.push_back(0);  // version 2.4 LE
    v.push_back(4); v.push_back(0);
    put_u32le(v, 0);
    put_u32le(v, 0);
    put_u32le(v, 65535);
    put_u32le(v, link_type);
    return v;
}

// Same header with every field stored big-endian (magic reads as 0xd4c3b2a1
// when loaded little-endian).
inline std::vector<uint8_t> pcap_header_be(uint32_t link_type = 1) {
    std::vector<uint8_t> v;
    put_u32be(v, 0xa1b2c3d4);
    put_u16be(v, 2);
    put_u16be(v, 4);
    put_u32be(v, 0);
    put_u32be(v, 0);
    put_u32be(v, 65535);
    put_u32be(v, link_type);
    return v;
}

inline void append_record_le(std::vector<uint8_t>& file, uint32_t sec, uint32_t frac,
                             const std::vector<uint8_t>& bytes) {
    put_u32le(file, sec);
    put_u32le(file, frac);
    put_u32le(file, static_cast<uint32_t>(bytes.size()));
    put_u32le(file, static_cast<uint32_t>(bytes.size()));
    file.insert(file.end(), bytes.begin(), bytes.end());
}

// Ethernet + IPv4 + TCP frame; payload appended verbatim.
inline std::vector<uint8_t> tcp_frame(uint32_t src_ip, uint16_t sport, uint32_t dst_ip,
                                      uint16_t dport, uint8_t flags,
                                      const std::vector<uint8_t>& payload,
                                      uint8_t ip_protocol = 6) {
    std::vector<uint8_t> f(12, 0x02);  // MACs
    put_u16be(f, 0x0800);
    uint16_t total = static_cast<uint16_t>(20 + 20 + payload.size());
    f.push_back(0x45); f.push_back(0);
    put_u16be(f, total);
    put_u16be(f, 0);   // id
    put_u16be(f, 0);   // frag
    f.push_back(64);   // ttl
    f.push_back(ip_protocol);
    put_u16be(f, 0);   // checksum (unchecked by the decoder)
    put_u32be(f, src_ip);
    put_u32be(f, dst_ip);
    put_u16be(f, sport);
    put_u16be(f, dport);
    put_u32be(f, 1);   // seq
    put_u32be(f, 0);   // ack
    f.push_back(0x50); // data offset 5
    f.push_back(flags);
    put_u16be(f, 4096);
    put_u16be(f, 0);
    put_u16be(f, 0);
    f.insert(f.end(), payload.begin(), payload.end());
    return f;
}

inline termrec::ParsedPacket make_packet(double ts, uint32_t src_ip, uint16_t sport,
                                         uint32_t dst_ip, uint16_t dport, uint32_t payload_len,
                                         uint8_t flags = 0x10, int behavior_code = 0) {
    termrec::ParsedPacket p;
    p.timestamp = ts;
    p.src_ip = src_ip;
    p.src_port = sport;
    p.dst_ip = dst_ip;
    p.dst_port = dport;
    p.payload_len = payload_len;
    p.tcp_flags = flags;
    p.behavior_code = behavior_code;
    return p;
}

}  // namespace testutil
