#pragma once

#include "msketch/sketch_tree.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace msketch {

/// On-disk layout, little-endian:
///   "RLTS" | version:u8 | n:u64 | d:u64 | p:u64 (0 = max norm) | eps_num:u32 | eps_exp:u32
///   | scale_exponent:i64 | phi_exponent:u64 | flags:u8 (0 lp, 1 euclidean)
/// followed by nine sections, each a u64 bit length and the payload padded to
/// a whole byte: topology, long_edges, centers, ingresses, gammas, etas,
/// leaf_etas, landmarks, augmentations.
inline constexpr std::array<char, 4> kSketchMagic{'R', 'L', 'T', 'S'};
inline constexpr std::uint8_t kSketchVersion = 1;

struct SizeReport {
    std::uint64_t header = 0; // fixed header plus the section length fields
    std::uint64_t topology = 0;
    std::uint64_t long_edges = 0;
    std::uint64_t centers = 0;
    std::uint64_t ingresses = 0;
    std::uint64_t gammas = 0;
    std::uint64_t etas = 0;
    std::uint64_t leaf_etas = 0;
    std::uint64_t landmarks = 0;
    std::uint64_t augmentations = 0;

    std::uint64_t total() const
    {
        return header + topology + long_edges + centers + ingresses + gammas + etas + leaf_etas + landmarks +
               augmentations;
    }
};

/// Serialized sketch. bit_length() excludes the byte padding after each section.
class SketchBits {
public:
    SketchBits() = default;
    explicit SketchBits(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

    const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
    std::uint64_t bit_length() const;

    static SketchBits load(const std::string& path);
    void save(const std::string& path) const;

    friend bool operator==(const SketchBits&, const SketchBits&) = default;

private:
    std::vector<std::uint8_t> bytes_;
};

SketchBits encode(const SketchTree& tree);

/// Rebuilds topology, levels, and every annotation. Throws Error(decode) on
/// a bad magic, version, truncation, or unbalanced topology.
SketchTree decode(const SketchBits& bits);

SizeReport size_report(const SketchBits& bits);

} // namespace msketch
