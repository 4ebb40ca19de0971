#include "termrec/behavior.hpp"

#include <sstream>

namespace termrec {

BehaviorCodeTable BehaviorCodeTable::default_table() {
    BehaviorCodeTable t;
    t.offset = 0;
    t.mapping.fill(kBehaviorZero);
    for (int s = 1; s <= kBehaviorStates; ++s) t.mapping[static_cast<size_t>(s)] = s;
    return t;
}

static int state_index(const std::string& name) {
    for (int s = 1; s <= kBehaviorStates; ++s)
        if (name == kBehaviorStateNames[static_cast<size_t>(s)]) return s;
    return -1;
}

BehaviorCodeTable BehaviorCodeTable::parse(const std::string& text) {
    BehaviorCodeTable t;
    t.mapping.fill(kBehaviorZero);
    bool saw_offset = false;
    std::array<bool, kBehaviorStates + 1> seen{};
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        size_t eq = line.find('=');
        if (eq == std::string::npos) {
            // blank or comment-only line
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw ConfigError("behavior table line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key == "offset") {
            t.offset = static_cast<size_t>(std::stoul(val));
            saw_offset = true;
            continue;
        }
        int state = state_index(key);
        if (state < 0)
            throw ConfigError("behavior table: unknown state '" + key + "'");
        if (seen[static_cast<size_t>(state)])
            throw ConfigError("behavior table: duplicate state '" + key + "'");
        seen[static_cast<size_t>(state)] = true;
        if (val.size() < 2 || val.front() != '[' || val.back() != ']')
            throw ConfigError("behavior table: expected [codes...] for '" + key + "'");
        std::string inner = val.substr(1, val.size() - 2);
        std::istringstream codes(inner);
        std::string tok;
        bool any = false;
        while (std::getline(codes, tok, ',')) {
            tok = trim(tok);
            if (tok.empty()) continue;
            unsigned long v = std::stoul(tok, nullptr, 0);
            if (v > 255) throw ConfigError("behavior table: code out of byte range");
            if (t.mapping[v] != kBehaviorZero)
                throw ConfigError("behavior table: byte value mapped twice");
            t.mapping[v] = state;
            any = true;
        }
        if (!any) throw ConfigError("behavior table: state '" + key + "' has no codes");
    }
    if (!saw_offset) throw ConfigError("behavior table: missing offset");
    for (int s = 1; s <= kBehaviorStates; ++s)
        if (!seen[static_cast<size_t>(s)])
            throw ConfigError(std::string("behavior table: missing state '") +
                              kBehaviorStateNames[static_cast<size_t>(s)] + "'");
    return t;
}

std::string BehaviorCodeTable::to_text() const {
    std::ostringstream out;
    out << "offset = " << offset << "\n";
    for (int s = 1; s <= kBehaviorStates; ++s) {
        out << kBehaviorStateNames[static_cast<size_t>(s)] << " = [";
        bool first = true;
        for (size_t v = 0; v < 256; ++v) {
            if (mapping[v] == s) {
                if (!first) out << ", ";
                out << v;
                first = false;
            }
        }
        out << "]\n";
    }
    return out.str();
}

uint8_t BehaviorCodeTable::code_for_state(int state) const {
    for (size_t v = 0; v < 256; ++v)
        if (mapping[v] == state) return static_cast<uint8_t>(v);
    throw ConfigError("behavior table: state has no byte code");
}

int extract_behavior_code(std::span<const uint8_t> payload, const BehaviorCodeTable& table) {
    if (table.offset >= payload.size()) return kBehaviorZero;
    return table.mapping[payload[table.offset]];
}

}  // namespace termrec
