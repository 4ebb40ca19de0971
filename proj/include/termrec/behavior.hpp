#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "termrec/common.hpp"

namespace termrec {

// 14 application-layer behavior states plus ZERO for empty or unmapped
// payloads. Six categories: Test(2), Write(1), Identification(1), Read(6),
// Transport(3), Individuation(1).
inline constexpr int kBehaviorZero = 0;
inline constexpr int kBehaviorStates = 14;  // non-ZERO states

inline constexpr std::array<const char*, kBehaviorStates + 1> kBehaviorStateNames = {
    "ZERO",
    "TEST_LINK", "TEST_ECHO",
    "WRITE_SET",
    "IDENT_QUERY",
    "READ_REALTIME", "READ_HISTORY", "READ_EVENT",
    "READ_PARAM", "READ_FREEZE", "READ_FOLLOWUP",
    "TRANSPORT_FORWARD", "TRANSPORT_BROADCAST", "TRANSPORT_FILE",
    "CUSTOM_EXT",
};

// Maps the byte at a fixed payload offset to one of the 14 states.
// Both the offset and the value->state mapping are configuration; the
// shipped default puts the byte at offset 0 with code values 1..14.
struct BehaviorCodeTable {
    size_t offset = 0;
    std::array<int, 256> mapping{};  // byte value -> state index (0 = ZERO)

    static BehaviorCodeTable default_table();

    // Structured text: "offset = N" plus one "STATE = [v, v, ...]" per state.
    static BehaviorCodeTable parse(const std::string& text);
    std::string to_text() const;

    // First byte value mapped to the given state (for the generator).
    uint8_t code_for_state(int state) const;
};

// Total function: ZERO when the payload is empty, shorter than the offset,
// or carries an unmapped byte value.
int extract_behavior_code(std::span<const uint8_t> payload, const BehaviorCodeTable& table);

}  // namespace termrec
