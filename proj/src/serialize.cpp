#include "termrec/serialize.hpp"

#include <array>
#include <cstring>
#include <sstream>

namespace termrec {

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const uint8_t* data, size_t len) {
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (size_t i = 0; i < len; i += 3) {
        uint32_t v = static_cast<uint32_t>(data[i]) << 16;
        if (i + 1 < len) v |= static_cast<uint32_t>(data[i + 1]) << 8;
        if (i + 2 < len) v |= data[i + 2];
        out.push_back(kB64[(v >> 18) & 63]);
        out.push_back(kB64[(v >> 12) & 63]);
        out.push_back(i + 1 < len ? kB64[(v >> 6) & 63] : '=');
        out.push_back(i + 2 < len ? kB64[v & 63] : '=');
    }
    return out;
}

std::vector<uint8_t> base64_decode(const std::string& text) {
    std::array<int8_t, 256> rev;
    rev.fill(-1);
    for (int i = 0; i < 64; ++i) rev[static_cast<uint8_t>(kB64[i])] = static_cast<int8_t>(i);
    std::vector<uint8_t> out;
    uint32_t buf = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '\n' || c == '\r' || c == '=') continue;
        int8_t v = rev[static_cast<uint8_t>(c)];
        if (v < 0) throw Error("base64: invalid character");
        buf = (buf << 6) | static_cast<uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<uint8_t>(buf >> bits));
        }
    }
    return out;
}

uint32_t crc32(const uint8_t* data, size_t len) {
    static std::array<uint32_t, 256> table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    uint32_t crc = 0xffffffffu;
    for (size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xff] ^ (crc >> 8);
    return crc ^ 0xffffffffu;
}

void write_block(std::ostream& out, const std::string& name, const std::vector<double>& values,
                 size_t rows, size_t cols) {
    if (values.size() != rows * cols) throw BadShape("write_block: shape/value mismatch");
    std::vector<uint8_t> bytes(values.size() * sizeof(double));
    std::memcpy(bytes.data(), values.data(), bytes.size());
    uint32_t crc = crc32(bytes.data(), bytes.size());
    out << "[block " << name << ' ' << rows << ' ' << cols << ' ' << crc << "]\n";
    std::string b64 = base64_encode(bytes.data(), bytes.size());
    for (size_t i = 0; i < b64.size(); i += 76) out << b64.substr(i, 76) << '\n';
    out << "[end]\n";
}

void write_block(std::ostream& out, const std::string& name, const Matrix& m) {
    write_block(out, name, m.data(), m.rows(), m.cols());
}

Matrix Block::as_matrix() const {
    Matrix m(rows, cols);
    m.data() = values;
    return m;
}

Block read_block(std::istream& in) {
    std::string line;
    while (std::getline(in, line) && line.empty()) {
    }
    Block block;
    uint32_t crc_expected = 0;
    {
        std::istringstream head(line);
        std::string tag;
        if (!(head >> tag >> block.name >> block.rows >> block.cols >> crc_expected) ||
            tag != "[block")
            throw Error("pipeline artifact: expected block header, got: " + line);
    }
    std::string b64;
    while (std::getline(in, line)) {
        if (line == "[end]") break;
        b64 += line;
    }
    std::vector<uint8_t> bytes = base64_decode(b64);
    if (bytes.size() != block.rows * block.cols * sizeof(double))
        throw Error("pipeline artifact: block '" + block.name + "' size mismatch");
    if (crc32(bytes.data(), bytes.size()) != crc_expected)
        throw Error("pipeline artifact: block '" + block.name + "' checksum mismatch");
    block.values.resize(block.rows * block.cols);
    std::memcpy(block.values.data(), bytes.data(), bytes.size());
    return block;
}

}  // namespace termrec
