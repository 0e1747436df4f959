#include <doctest.h>

#include "msketch/bit_stream.hpp"
#include "msketch/error.hpp"

#include <random>

using namespace msketch;

TEST_CASE("gamma code of small integers")
{
    BitWriter w;
    w.put_gamma(1);
    w.put_gamma(2);
    w.put_gamma(5);
    CHECK(w.bit_length() == 1 + 3 + 5);
    CHECK(gamma_length(1) == 1);
    CHECK(gamma_length(5) == 5);
    BitReader r(w.bytes(), w.bit_length());
    CHECK(r.get_gamma() == 1);
    CHECK(r.get_gamma() == 2);
    CHECK(r.get_gamma() == 5);
    CHECK(r.at_end());
    CHECK_THROWS_AS(r.get_bit(), Error);
}

TEST_CASE("zigzag round trip")
{
    for (std::int64_t v : {0LL, 1LL, -1LL, 2LL, -2LL, 1LL << 40, -(1LL << 40)}) {
        CHECK(unzigzag(zigzag(v)) == v);
    }
    CHECK(zigzag(-1) == 1);
    CHECK(zigzag(1) == 2);
}

TEST_CASE("index widths")
{
    CHECK(index_width(0) == 0);
    CHECK(index_width(1) == 0);
    CHECK(index_width(2) == 1);
    CHECK(index_width(3) == 2);
    CHECK(index_width(1024) == 10);
    CHECK(index_width(1025) == 11);
}

TEST_CASE("mixed stream round trip")
{
    std::mt19937_64 rng(5);
    std::vector<std::uint64_t> fixed;
    std::vector<unsigned> widths;
    std::vector<std::uint64_t> gammas;
    std::vector<std::int64_t> signeds;
    BitWriter w;
    for (int i = 0; i < 2000; ++i) {
        const unsigned width = static_cast<unsigned>(rng() % 65);
        const std::uint64_t v = width == 64 ? rng() : rng() & ((std::uint64_t{1} << width) - 1);
        const std::uint64_t g = (rng() >> (rng() % 64)) | 1;
        const auto s = static_cast<std::int64_t>(rng() >> (1 + rng() % 63)) * (rng() % 2 ? 1 : -1);
        w.put_bits(v, width);
        w.put_gamma(g);
        w.put_signed_gamma(s);
        fixed.push_back(v);
        widths.push_back(width);
        gammas.push_back(g);
        signeds.push_back(s);
    }
    BitReader r(w.bytes(), w.bit_length());
    for (std::size_t i = 0; i < fixed.size(); ++i) {
        CHECK(r.get_bits(widths[i]) == fixed[i]);
        CHECK(r.get_gamma() == gammas[i]);
        CHECK(r.get_signed_gamma() == signeds[i]);
    }
    CHECK(r.at_end());
}
