#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace leo {

// Little-endian binary serialization for checkpoints. The byte order is
// fixed by construction (explicit shifts), not by the host.
class BinWriter {
public:
    explicit BinWriter(const std::string& path);

    void u8(std::uint8_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i64(std::int64_t v);
    void f64(double v);
    void str(const std::string& s);
    void f64_vec(const std::vector<double>& v);
    void u64_vec(const std::vector<std::uint64_t>& v);
    void bytes(const std::vector<std::uint8_t>& v);

private:
    std::ofstream out_;
};

class BinReader {
public:
    explicit BinReader(const std::string& path);

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int64_t i64();
    double f64();
    std::string str();
    std::vector<double> f64_vec();
    std::vector<std::uint64_t> u64_vec();
    std::vector<std::uint8_t> bytes();

    // Consumes `magic` or throws std::runtime_error naming the file.
    void expect_magic(const std::string& magic);

private:
    void fill(char* dst, std::size_t n);
    std::ifstream in_;
    std::string path_;
};

}  // namespace leo
