#include "msketch/bit_stream.hpp"

#include "msketch/error.hpp"

#include <bit>

namespace msketch {

void BitWriter::put_bit(bool b)
{
    if ((bits_ & 7) == 0) {
        bytes_.push_back(0);
    }
    if (b) {
        bytes_.back() |= static_cast<std::uint8_t>(1u << (bits_ & 7));
    }
    ++bits_;
}

void BitWriter::put_bits(std::uint64_t value, unsigned width)
{
    for (unsigned i = 0; i < width; ++i) {
        put_bit((value >> i) & 1u);
    }
}

void BitWriter::put_gamma(std::uint64_t value)
{
    require(value >= 1, ErrorKind::internal, "Elias-gamma code of zero");
    const unsigned top = static_cast<unsigned>(std::bit_width(value)) - 1;
    for (unsigned i = 0; i < top; ++i) {
        put_bit(false);
    }
    put_bit(true);
    // remaining bits below the leading one, most significant first
    for (unsigned i = top; i-- > 0;) {
        put_bit((value >> i) & 1u);
    }
}

void BitWriter::put_signed_gamma(std::int64_t v)
{
    const std::uint64_t z = zigzag(v);
    require(z != ~std::uint64_t{0}, ErrorKind::internal, "signed gamma value out of range");
    put_gamma(z + 1);
}

bool BitReader::get_bit()
{
    if (pos_ >= limit_) {
        fail(ErrorKind::decode, "truncated bit stream");
    }
    const bool b = (bytes_[pos_ >> 3] >> (pos_ & 7)) & 1u;
    ++pos_;
    return b;
}

std::uint64_t BitReader::get_bits(unsigned width)
{
    std::uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i) {
        if (get_bit()) {
            v |= std::uint64_t{1} << i;
        }
    }
    return v;
}

std::uint64_t BitReader::get_gamma()
{
    unsigned zeros = 0;
    while (!get_bit()) {
        if (++zeros > 63) {
            fail(ErrorKind::decode, "malformed Elias-gamma code");
        }
    }
    std::uint64_t v = 1;
    for (unsigned i = 0; i < zeros; ++i) {
        v = (v << 1) | (get_bit() ? 1u : 0u);
    }
    return v;
}

std::int64_t BitReader::get_signed_gamma() { return unzigzag(get_gamma() - 1); }

unsigned gamma_length(std::uint64_t value) { return 2 * static_cast<unsigned>(std::bit_width(value)) - 1; }

unsigned index_width(std::uint64_t count)
{
    return count <= 1 ? 0u : static_cast<unsigned>(std::bit_width(count - 1));
}

} // namespace msketch
