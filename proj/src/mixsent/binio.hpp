#pragma once

// Little-endian primitives for the model and ensemble file formats.

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "mixsent/error.hpp"

namespace mixsent::binio {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 4);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 8);
}

inline void put_f64(std::ostream& out, double v) {
    std::uint64_t bits = 0;
    static_assert(sizeof bits == sizeof v);
    std::memcpy(&bits, &v, sizeof v);
    put_u64(out, bits);
}

inline void put_string(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
public:
    Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    void bytes(char* dst, std::size_t n) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) fail(ErrorCode::format, source_ + ": truncated file");
    }

    std::uint32_t u32() {
        unsigned char b[4];
        bytes(reinterpret_cast<char*>(b), 4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    std::uint64_t u64() {
        unsigned char b[8];
        bytes(reinterpret_cast<char*>(b), 8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    double f64() {
        const std::uint64_t bits = u64();
        double v = 0.0;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }

    std::string string(std::size_t limit = 1u << 26) {
        const std::uint32_t n = u32();
        if (n > limit) fail(ErrorCode::format, source_ + ": string length " + std::to_string(n) + " exceeds limit");
        std::string s(n, '\0');
        if (n) bytes(s.data(), n);
        return s;
    }

    void expect_magic(const char (&magic)[5]) {
        char got[4];
        in_.read(got, 4);
        if (in_.gcount() != 4 || std::string(got, 4) != std::string(magic, 4)) {
            fail(ErrorCode::format, source_ + ": bad magic (expected " + std::string(magic, 4) + ")");
        }
    }

    const std::string& source() const { return source_; }

private:
    std::istream& in_;
    std::string source_;
};

}  // namespace mixsent::binio
