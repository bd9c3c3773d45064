#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ecgi {

// Thrown for bad inputs: malformed files, shape mismatches, config errors.
// The CLI maps this to exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown for failures at run time: numerical instability, I/O errors.
// The CLI maps this to exit code 3.
struct RuntimeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t fnv1a(std::uint64_t value, std::uint64_t h) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
    return fnv1a(bytes, 8, h);
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = kFnvOffset) {
    return fnv1a(s.data(), s.size(), h);
}

}  // namespace ecgi
