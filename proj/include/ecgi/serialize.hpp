#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "ecgi/common.hpp"
#include "ecgi/tensor.hpp"

// Binary primitives shared by tensor files, hierarchy files and checkpoints.
// All integers and doubles are little-endian regardless of host order.

namespace ecgi {

inline void write_u32(std::ostream& os, std::uint32_t x) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>(x >> (8 * i));
    os.write(b, 4);
}

inline void write_u64(std::ostream& os, std::uint64_t x) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(x >> (8 * i));
    os.write(b, 8);
}

inline void write_f64(std::ostream& os, double x) {
    write_u64(os, std::bit_cast<std::uint64_t>(x));
}

inline std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw RuntimeError("read_u32: unexpected end of stream");
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return x;
}

inline std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw RuntimeError("read_u64: unexpected end of stream");
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return x;
}

inline double read_f64(std::istream& is) { return std::bit_cast<double>(read_u64(is)); }

inline void write_string(std::ostream& os, const std::string& s) {
    write_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
    std::uint64_t n = read_u64(is);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) throw RuntimeError("read_string: unexpected end of stream");
    return s;
}

// Tensor block: u32 rank, u64 dims[rank], f64 values row-major.
inline void write_tensor(std::ostream& os, const Tensor& t) {
    write_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape) write_u64(os, d);
    for (double x : t.v) write_f64(os, x);
}

inline Tensor read_tensor(std::istream& is) {
    std::uint32_t rank = read_u32(is);
    if (rank > 3) throw ValidationError("read_tensor: rank " + std::to_string(rank) + " > 3");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(read_u64(is));
    Tensor t(shape);
    for (double& x : t.v) x = read_f64(is);
    return t;
}

inline void save_tensor(const std::string& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw RuntimeError("cannot open for write: " + path);
    write_tensor(os, t);
    if (!os) throw RuntimeError("write failed: " + path);
}

inline Tensor load_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw RuntimeError("cannot open for read: " + path);
    return read_tensor(is);
}

}  // namespace ecgi
