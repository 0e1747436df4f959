#pragma once

#include "msketch/codec.hpp"
#include "msketch/tree_builder.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace msketch {

struct JlConfig {
    std::size_t target_dim = 1;
    std::uint64_t seed = 0;
    double eps = 0.5;

    /// target_dim = max(ceil(3 eps^-2 log2 n), 1).
    static JlConfig for_points(std::size_t n, double eps, std::uint64_t seed);
};

/// Independent seeds for the projection matrix and the two shift vectors.
struct SeedStreams {
    std::uint64_t matrix;
    std::uint64_t shift1;
    std::uint64_t shift2;

    static SeedStreams split(std::uint64_t seed);
};

/// y_i = M x_i with i.i.d. N(0, 1/d') entries; no rescaling.
PointSet project_points(const PointSet& ps, const JlConfig& cfg);

/// y_i = M x_i with i.i.d. N(0, 1/d') entries, then rescaled by a power of two
/// so the minimum distance lies in [1, 2). The rescaling adds to scale_exponent.
PointSet jl_transform(const PointSet& ps, const JlConfig& cfg);

/// d uniform [0, 1) values from the given stream.
std::vector<double> draw_shift(std::uint64_t stream_seed, std::size_t d);

/// Randomized grid roundings for every L(T) node, one copy per shift vector.
Augmentations build_augmentations(const RelativeLocationTree& t, const std::vector<double>& sigma1,
                                  const std::vector<double>& sigma2);

struct EuclideanSketch {
    RelativeLocationTree tree; // built on the projected points
    SketchBits bits;
};

/// Projection, tree at eps 1/2, augmentations, and encoding. The shifts are discarded.
EuclideanSketch build_euclidean_sketch(const PointSet& ps, double eps, std::uint64_t seed);

} // namespace msketch
