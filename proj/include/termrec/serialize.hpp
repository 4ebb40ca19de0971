#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "termrec/common.hpp"

namespace termrec {

std::string base64_encode(const uint8_t* data, size_t len);
std::vector<uint8_t> base64_decode(const std::string& text);

uint32_t crc32(const uint8_t* data, size_t len);

// Named dense numeric block: structured-text header, base64 payload of
// little-endian doubles, per-block checksum.
void write_block(std::ostream& out, const std::string& name, const std::vector<double>& values,
                 size_t rows, size_t cols);
void write_block(std::ostream& out, const std::string& name, const Matrix& m);

struct Block {
    std::string name;
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> values;

    Matrix as_matrix() const;
};

// Reads the next block; validates the checksum.
Block read_block(std::istream& in);

}  // namespace termrec
