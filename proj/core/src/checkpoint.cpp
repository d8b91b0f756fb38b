#include "leosim/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

namespace leo {

BinWriter::BinWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path);
}

void BinWriter::u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }

void BinWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void BinWriter::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void BinWriter::i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }

void BinWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinWriter::str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinWriter::f64_vec(const std::vector<double>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (double x : v) f64(x);
}

void BinWriter::u64_vec(const std::vector<std::uint64_t>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (auto x : v) u64(x);
}

void BinWriter::bytes(const std::vector<std::uint8_t>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size()));
}

BinReader::BinReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw std::runtime_error("cannot open for reading: " + path);
}

void BinReader::fill(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
        throw std::runtime_error("truncated checkpoint: " + path_);
}

std::uint8_t BinReader::u8() {
    char c;
    fill(&c, 1);
    return static_cast<std::uint8_t>(c);
}

std::uint32_t BinReader::u32() {
    char b[4];
    fill(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}

std::uint64_t BinReader::u64() {
    char b[8];
    fill(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}

std::int64_t BinReader::i64() { return static_cast<std::int64_t>(u64()); }

double BinReader::f64() { return std::bit_cast<double>(u64()); }

std::string BinReader::str() {
    const auto n = u32();
    std::string s(n, '\0');
    if (n > 0) fill(s.data(), n);
    return s;
}

std::vector<double> BinReader::f64_vec() {
    const auto n = u32();
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
}

std::vector<std::uint64_t> BinReader::u64_vec() {
    const auto n = u32();
    std::vector<std::uint64_t> v(n);
    for (auto& x : v) x = u64();
    return v;
}

std::vector<std::uint8_t> BinReader::bytes() {
    const auto n = u32();
    std::vector<std::uint8_t> v(n);
    if (n > 0) fill(reinterpret_cast<char*>(v.data()), n);
    return v;
}

void BinReader::expect_magic(const std::string& magic) {
    std::string got(magic.size(), '\0');
    fill(got.data(), got.size());
    if (got != magic)
        throw std::runtime_error("bad checkpoint magic in " + path_ + " (expected " + magic + ")");
}

}  // namespace leo
