#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include "g2x/detector.hpp"

namespace g2x {

// Timestamp stream file format, little-endian:
//   "PTS1" | resolution [ps, u64] | integration time [ps, u64] | count [u64]
//   followed by `count` sorted event ticks as u64.

namespace detail {

inline void put_u64_le(std::FILE* f, std::uint64_t v) {
    std::array<unsigned char, 8> b{};
    for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<unsigned char>(v >> (8 * i));
    if (std::fwrite(b.data(), 1, 8, f) != 8) throw std::runtime_error("pts1: write failed");
}

inline std::uint64_t get_u64_le(std::FILE* f) {
    std::array<unsigned char, 8> b{};
    if (std::fread(b.data(), 1, 8, f) != 8) throw std::runtime_error("pts1: truncated file");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
    return v;
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace detail

inline void write_pts1(const std::string& path, const TimestampStream& stream) {
    detail::FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw std::runtime_error("pts1: cannot open " + path + " for writing");
    if (std::fwrite("PTS1", 1, 4, f.get()) != 4) throw std::runtime_error("pts1: write failed");
    detail::put_u64_le(f.get(), stream.resolution_ps);
    detail::put_u64_le(f.get(), stream.duration_ps);
    detail::put_u64_le(f.get(), stream.ticks.size());
    for (const std::uint64_t t : stream.ticks) detail::put_u64_le(f.get(), t);
}

inline TimestampStream read_pts1(const std::string& path, char channel = 'A') {
    detail::FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw std::runtime_error("pts1: cannot open " + path);
    char magic[4] = {};
    if (std::fread(magic, 1, 4, f.get()) != 4 || std::string_view(magic, 4) != "PTS1")
        throw std::runtime_error("pts1: " + path + " is not a PTS1 file");
    TimestampStream s;
    s.channel = channel;
    s.resolution_ps = detail::get_u64_le(f.get());
    s.duration_ps = detail::get_u64_le(f.get());
    const std::uint64_t count = detail::get_u64_le(f.get());
    s.ticks.resize(count);
    std::uint64_t prev = 0;
    for (std::uint64_t i = 0; i < count; ++i) {
        s.ticks[i] = detail::get_u64_le(f.get());
        if (i > 0 && s.ticks[i] < prev) throw std::runtime_error("pts1: " + path + " is not sorted");
        prev = s.ticks[i];
    }
    return s;
}

} // namespace g2x
