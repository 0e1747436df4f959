#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace msketch {

/// Order p of an lp norm. p = 0 encodes the max norm.
class NormOrder {
public:
    constexpr NormOrder() = default;

    static constexpr NormOrder finite(unsigned p) { return NormOrder(p); }
    static constexpr NormOrder infinity() { return NormOrder(0); }

    constexpr bool is_infinity() const noexcept { return p_ == 0; }
    constexpr unsigned value() const noexcept { return p_; }

    /// 0 stands for infinity, matching the on-disk encoding.
    static NormOrder from_code(std::uint64_t code);
    constexpr std::uint64_t code() const noexcept { return p_; }

    friend constexpr bool operator==(NormOrder, NormOrder) = default;

private:
    constexpr explicit NormOrder(unsigned p) : p_(p) {}
    unsigned p_ = 2;
};

/// d^{1/p}, with the convention d^{1/p} = 1 for the max norm.
double root_dim(std::size_t d, NormOrder p);

double lp_norm(std::span<const double> x, NormOrder p);
double lp_distance(std::span<const double> x, std::span<const double> y, NormOrder p);

/// n points in d dimensions, row-major. After ingestion all pairwise
/// distances lie in [1, phi] and coordinates are divided by 2^scale_exponent.
struct PointSet {
    std::size_t n = 0;
    std::size_t d = 0;
    NormOrder p;
    std::vector<double> coords;
    std::int64_t scale_exponent = 0;
    double phi = 1.0;

    std::span<const double> row(std::size_t i) const { return {coords.data() + i * d, d}; }
    std::span<double> row(std::size_t i) { return {coords.data() + i * d, d}; }

    double distance(std::size_t i, std::size_t j) const { return lp_distance(row(i), row(j), p); }
};

/// Element of the grid net 2*B_p^d intersected with the grid of cell side gamma / d^{1/p}.
struct NetElement {
    std::vector<std::int64_t> grid_coords;
    double gamma = 1.0;

    std::vector<double> value(NormOrder p) const;
};

/// Bottom-left corner of a grid cell: corner_coords * cell_side.
struct GridCorner {
    std::vector<std::int64_t> corner_coords;
    double cell_side = 1.0;

    std::vector<double> value() const;
};

/// Largest |grid coordinate| a net element of precision gamma may carry.
std::int64_t net_coord_bound(std::size_t d, NormOrder p, double gamma);

/// Rounds v (with ||v||_p <= 1) down to the grid net of precision gamma.
/// The result lies within lp distance gamma of v.
NetElement round_to_net(std::span<const double> v, double gamma, NormOrder p);

/// Same rounding with an explicit cell side; no norm check. Used by the tree
/// builder where the cell side is shared across calls.
void floor_to_grid(std::span<const double> v, double cell_side, std::span<std::int64_t> out);

/// Corner of the cell of side cell_side containing y + cell_side * sigma.
GridCorner randomized_grid_round(std::span<const double> y, double cell_side, std::span<const double> sigma);

} // namespace msketch
