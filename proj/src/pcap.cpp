#include "termrec/pcap.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace termrec {

namespace {

constexpr uint32_t kMagicMicroLE = 0xa1b2c3d4;  // file is reader-order, micro
constexpr uint32_t kMagicMicroBE = 0xd4c3b2a1;  // byte-swapped file, micro
constexpr uint32_t kMagicNanoLE = 0xa1b23c4d;
constexpr uint32_t kMagicNanoBE = 0x4d3cb2a1;

uint32_t bswap32(uint32_t v) {
    return ((v & 0xff) << 24) | ((v & 0xff00) << 8) | ((v >> 8) & 0xff00) | (v >> 24);
}
uint16_t bswap16(uint16_t v) { return static_cast<uint16_t>((v << 8) | (v >> 8)); }

uint32_t load_u32le(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t load_u16le(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
uint16_t load_u16be(const uint8_t* p) {
    return static_cast<uint16_t>((p[0] << 8) | p[1]);
}

}  // namespace

PcapReader::PcapReader(std::span<const uint8_t> file_bytes) : bytes_(file_bytes) {
    if (bytes_.size() < 24) throw TruncatedHeader("pcap global header shorter than 24 bytes");
    uint32_t raw = load_u32le(bytes_.data());
    switch (raw) {
        case kMagicMicroLE: header_.big_endian = false; header_.nanoseconds = false; break;
        case kMagicMicroBE: header_.big_endian = true;  header_.nanoseconds = false; break;
        case kMagicNanoLE:  header_.big_endian = false; header_.nanoseconds = true;  break;
        case kMagicNanoBE:  header_.big_endian = true;  header_.nanoseconds = true;  break;
        default: {
            std::ostringstream msg;
            msg << "unknown pcap magic 0x" << std::hex << raw;
            throw BadMagic(msg.str());
        }
    }
    header_.magic = header_.big_endian ? bswap32(raw) : raw;
    header_.version_major = read_u16(4);
    header_.version_minor = read_u16(6);
    header_.snaplen = read_u32(16);
    header_.link_type = read_u32(20);
    pos_ = 24;
}

uint32_t PcapReader::read_u32(size_t off) const {
    uint32_t v = load_u32le(bytes_.data() + off);
    return header_.big_endian ? bswap32(v) : v;
}
uint16_t PcapReader::read_u16(size_t off) const {
    uint16_t v = load_u16le(bytes_.data() + off);
    return header_.big_endian ? bswap16(v) : v;
}

std::optional<RawRecord> PcapReader::next() {
    if (pos_ == bytes_.size()) return std::nullopt;
    if (pos_ + 16 > bytes_.size())
        throw TruncatedRecord("record header truncated at offset " + std::to_string(pos_));
    uint32_t ts_sec = read_u32(pos_);
    uint32_t ts_frac = read_u32(pos_ + 4);
    uint32_t incl_len = read_u32(pos_ + 8);
    if (pos_ + 16 + incl_len > bytes_.size())
        throw TruncatedRecord("record body truncated at offset " + std::to_string(pos_));
    RawRecord rec;
    double scale = header_.nanoseconds ? 1e-9 : 1e-6;
    rec.timestamp = static_cast<double>(ts_sec) + static_cast<double>(ts_frac) * scale;
    rec.bytes = bytes_.subspan(pos_ + 16, incl_len);
    pos_ += 16 + incl_len;
    return rec;
}

std::optional<ParsedPacket> decode_packet(const RawRecord& record, uint32_t link_type,
                                          IngestStats* stats) {
    std::span<const uint8_t> b = record.bytes;
    size_t ip_off = 0;
    if (link_type == kLinkEthernet) {
        if (b.size() < 14) throw MalformedPacket("frame shorter than ethernet header");
        uint16_t ethertype = load_u16be(b.data() + 12);
        if (ethertype != 0x0800) {
            if (stats) ++stats->skipped_non_ipv4;
            return std::nullopt;
        }
        ip_off = 14;
    } else if (link_type != kLinkRawIpv4) {
        throw MalformedPacket("unsupported link type " + std::to_string(link_type));
    }

    if (b.size() < ip_off + 20) throw MalformedPacket("captured bytes shorter than IPv4 header");
    const uint8_t* ip = b.data() + ip_off;
    if ((ip[0] >> 4) != 4) {
        if (stats) ++stats->skipped_non_ipv4;
        return std::nullopt;
    }
    size_t ihl = static_cast<size_t>(ip[0] & 0x0f) * 4;
    if (ihl < 20) throw MalformedPacket("IPv4 IHL below minimum");
    uint16_t total_length = load_u16be(ip + 2);
    if (total_length < ihl) throw MalformedPacket("IPv4 total length below header length");
    if (ip_off + total_length > b.size())
        throw MalformedPacket("IPv4 total length exceeds captured bytes");
    uint8_t protocol = ip[9];
    if (protocol != 6) {
        if (stats) ++stats->skipped_non_tcp;
        return std::nullopt;
    }
    if (ip_off + ihl + 20 > b.size()) throw MalformedPacket("captured bytes shorter than TCP header");
    const uint8_t* tcp = b.data() + ip_off + ihl;
    size_t data_offset = static_cast<size_t>(tcp[12] >> 4) * 4;
    if (data_offset < 20) throw MalformedPacket("TCP data offset below minimum");
    if (ihl + data_offset > total_length)
        throw MalformedPacket("TCP header exceeds IPv4 total length");

    ParsedPacket pkt;
    pkt.timestamp = record.timestamp;
    pkt.src_ip = (static_cast<uint32_t>(ip[12]) << 24) | (ip[13] << 16) | (ip[14] << 8) | ip[15];
    pkt.dst_ip = (static_cast<uint32_t>(ip[16]) << 24) | (ip[17] << 16) | (ip[18] << 8) | ip[19];
    pkt.src_port = load_u16be(tcp);
    pkt.dst_port = load_u16be(tcp + 2);
    pkt.tcp_flags = tcp[13];
    pkt.payload_len = static_cast<uint32_t>(total_length - ihl - data_offset);
    size_t payload_off = ip_off + ihl + data_offset;
    if (payload_off + pkt.payload_len > b.size())
        throw MalformedPacket("TCP payload exceeds captured bytes");
    pkt.payload.assign(b.begin() + static_cast<ptrdiff_t>(payload_off),
                       b.begin() + static_cast<ptrdiff_t>(payload_off + pkt.payload_len));
    return pkt;
}

std::vector<ParsedPacket> ingest_pcap(std::span<const uint8_t> file_bytes,
                                      const BehaviorCodeTable& table, IngestStats& stats) {
    PcapReader reader(file_bytes);
    std::vector<ParsedPacket> out;
    while (auto rec = reader.next()) {
        ++stats.records;
        std::optional<ParsedPacket> pkt;
        try {
            pkt = decode_packet(*rec, reader.header().link_type, &stats);
        } catch (const MalformedPacket&) {
            ++stats.malformed;
            continue;
        }
        if (!pkt) continue;
        pkt->behavior_code = extract_behavior_code(pkt->payload, table);
        out.push_back(std::move(*pkt));
        ++stats.packets;
    }
    return out;
}

PcapWriter::PcapWriter(uint32_t snaplen, uint32_t link_type) : snaplen_(snaplen) {
    auto put32 = [&](uint32_t v) {
        out_.push_back(static_cast<uint8_t>(v));
        out_.push_back(static_cast<uint8_t>(v >> 8));
        out_.push_back(static_cast<uint8_t>(v >> 16));
        out_.push_back(static_cast<uint8_t>(v >> 24));
    };
    auto put16 = [&](uint16_t v) {
        out_.push_back(static_cast<uint8_t>(v));
        out_.push_back(static_cast<uint8_t>(v >> 8));
    };
    put32(0xa1b2c3d4);
    put16(2);  // version 2.4
    put16(4);
    put32(0);  // thiszone
    put32(0);  // sigfigs
    put32(snaplen);
    put32(link_type);
}

void PcapWriter::add_record(double timestamp, std::span<const uint8_t> frame) {
    auto put32 = [&](uint32_t v) {
        out_.push_back(static_cast<uint8_t>(v));
        out_.push_back(static_cast<uint8_t>(v >> 8));
        out_.push_back(static_cast<uint8_t>(v >> 16));
        out_.push_back(static_cast<uint8_t>(v >> 24));
    };
    uint32_t sec = static_cast<uint32_t>(timestamp);
    uint32_t usec = static_cast<uint32_t>((timestamp - sec) * 1e6 + 0.5);
    if (usec >= 1000000) {
        ++sec;
        usec -= 1000000;
    }
    uint32_t len = static_cast<uint32_t>(frame.size());
    if (len > snaplen_) len = snaplen_;
    put32(sec);
    put32(usec);
    put32(len);
    put32(static_cast<uint32_t>(frame.size()));
    out_.insert(out_.end(), frame.begin(), frame.begin() + len);
}

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, std::span<const uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

std::string ip_to_string(uint32_t ip) {
    std::ostringstream s;
    s << ((ip >> 24) & 0xff) << '.' << ((ip >> 16) & 0xff) << '.' << ((ip >> 8) & 0xff) << '.'
      << (ip & 0xff);
    return s.str();
}

uint32_t ip_from_string(const std::string& s) {
    unsigned a, b, c, d;
    char dot;
    std::istringstream in(s);
    if (!(in >> a >> dot >> b >> dot >> c >> dot >> d) || a > 255 || b > 255 || c > 255 || d > 255)
        throw ConfigError("bad IPv4 address: " + s);
    return (a << 24) | (b << 16) | (c << 8) | d;
}

}  // namespace termrec
