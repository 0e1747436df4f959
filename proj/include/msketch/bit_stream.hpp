#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace msketch {

/// Append-only bit buffer, least significant bit first within each byte.
class BitWriter {
public:
    void put_bit(bool b);
    /// Writes the low `width` bits of `value`, least significant first.
    void put_bits(std::uint64_t value, unsigned width);
    /// Elias-gamma code of value >= 1.
    void put_gamma(std::uint64_t value);
    /// Elias-gamma code of zigzag(v) + 1, so any signed value is accepted.
    void put_signed_gamma(std::int64_t v);

    std::size_t bit_length() const noexcept { return bits_; }
    const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t bits_ = 0;
};

class BitReader {
public:
    BitReader(std::span<const std::uint8_t> bytes, std::size_t bit_length) : bytes_(bytes), limit_(bit_length) {}

    bool get_bit();
    std::uint64_t get_bits(unsigned width);
    std::uint64_t get_gamma();
    std::int64_t get_signed_gamma();

    std::size_t position() const noexcept { return pos_; }
    bool at_end() const noexcept { return pos_ == limit_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t limit_;
    std::size_t pos_ = 0;
};

/// Number of bits in the Elias-gamma code of value >= 1.
unsigned gamma_length(std::uint64_t value);

/// ceil(log2(count)); zero for count <= 1.
unsigned index_width(std::uint64_t count);

inline std::uint64_t zigzag(std::int64_t v)
{
    return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}

inline std::int64_t unzigzag(std::uint64_t u)
{
    return static_cast<std::int64_t>(u >> 1) ^ -static_cast<std::int64_t>(u & 1);
}

} // namespace msketch
