#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace diffscrub {

// Error taxonomy. Every failure the library raises is one of these, so the
// CLI can map them onto distinct exit codes.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct VocabularyError : Error { using Error::Error; };
struct LengthError     : Error { using Error::Error; };
struct ScheduleError   : Error { using Error::Error; };
struct ShapeError      : Error { using Error::Error; };
struct NumericsError   : Error { using Error::Error; };
struct SpecError       : Error { using Error::Error; };
struct PolicyError     : Error { using Error::Error; };
struct IoError         : Error { using Error::Error; };
struct ProvenanceError : Error { using Error::Error; };
struct ConfigError     : Error { using Error::Error; };

// FNV-1a, used for content fingerprints (vocab hash, param fingerprints,
// config hashes). Not cryptographic; collisions are not a threat here.
inline uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const uint8_t*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < len; i++) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t fnv1a64(const std::string& s, uint64_t seed = 0xcbf29ce484222325ull) {
    return fnv1a64(s.data(), s.size(), seed);
}

std::string hex64(uint64_t v);

}  // namespace diffscrub
