#include "msketch/metric_core.hpp"

#include "msketch/error.hpp"

#include <algorithm>
#include <cmath>

namespace msketch {

NormOrder NormOrder::from_code(std::uint64_t code)
{
    if (code == 0) {
        return infinity();
    }
    require(code <= 64, ErrorKind::invalid_argument, "norm order out of range");
    return finite(static_cast<unsigned>(code));
}

double root_dim(std::size_t d, NormOrder p)
{
    if (p.is_infinity()) {
        return 1.0;
    }
    if (p.value() == 1) {
        return static_cast<double>(d);
    }
    if (p.value() == 2) {
        return std::sqrt(static_cast<double>(d));
    }
    return std::pow(static_cast<double>(d), 1.0 / p.value());
}

double lp_norm(std::span<const double> x, NormOrder p)
{
    if (p.is_infinity()) {
        double m = 0.0;
        for (double v : x) {
            m = std::max(m, std::abs(v));
        }
        return m;
    }
    switch (p.value()) {
    case 1: {
        double s = 0.0;
        for (double v : x) {
            s += std::abs(v);
        }
        return s;
    }
    case 2: {
        double s = 0.0;
        for (double v : x) {
            s += v * v;
        }
        return std::sqrt(s);
    }
    default: {
        const double q = p.value();
        double s = 0.0;
        for (double v : x) {
            s += std::pow(std::abs(v), q);
        }
        return std::pow(s, 1.0 / q);
    }
    }
}

double lp_distance(std::span<const double> x, std::span<const double> y, NormOrder p)
{
    require(x.size() == y.size(), ErrorKind::invalid_argument, "lp_distance: dimension mismatch");
    const std::size_t d = x.size();
    if (p.is_infinity()) {
        double m = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            m = std::max(m, std::abs(x[j] - y[j]));
        }
        return m;
    }
    if (p.value() == 1) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            s += std::abs(x[j] - y[j]);
        }
        return s;
    }
    if (p.value() == 2) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double t = x[j] - y[j];
            s += t * t;
        }
        return std::sqrt(s);
    }
    const double q = p.value();
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        s += std::pow(std::abs(x[j] - y[j]), q);
    }
    return std::pow(s, 1.0 / q);
}

std::vector<double> NetElement::value(NormOrder p) const
{
    const double cell = gamma / root_dim(grid_coords.size(), p);
    std::vector<double> out(grid_coords.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = static_cast<double>(grid_coords[j]) * cell;
    }
    return out;
}

std::vector<double> GridCorner::value() const
{
    std::vector<double> out(corner_coords.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = static_cast<double>(corner_coords[j]) * cell_side;
    }
    return out;
}

std::int64_t net_coord_bound(std::size_t d, NormOrder p, double gamma)
{
    return static_cast<std::int64_t>(std::ceil(2.0 * root_dim(d, p) / gamma));
}

void floor_to_grid(std::span<const double> v, double cell_side, std::span<std::int64_t> out)
{
    for (std::size_t j = 0; j < v.size(); ++j) {
        out[j] = static_cast<std::int64_t>(std::floor(v[j] / cell_side));
    }
}

// Slack for the ||v|| <= 1 precondition. Inputs arrive through a chain of
// floating operations whose exact value is provably inside the ball.
constexpr double kUnitBallSlack = 1e-9;

NetElement round_to_net(std::span<const double> v, double gamma, NormOrder p)
{
    require(gamma > 0.0 && gamma <= 1.0, ErrorKind::invalid_argument, "round_to_net: gamma must lie in (0, 1]");
    require(lp_norm(v, p) <= 1.0 + kUnitBallSlack, ErrorKind::precondition,
            "round_to_net: input outside the unit ball");
    NetElement out;
    out.gamma = gamma;
    out.grid_coords.resize(v.size());
    floor_to_grid(v, gamma / root_dim(v.size(), p), out.grid_coords);
    return out;
}

GridCorner randomized_grid_round(std::span<const double> y, double cell_side, std::span<const double> sigma)
{
    require(cell_side > 0.0, ErrorKind::invalid_argument, "randomized_grid_round: cell side must be positive");
    require(sigma.size() == y.size(), ErrorKind::invalid_argument, "randomized_grid_round: dimension mismatch");
    GridCorner out;
    out.cell_side = cell_side;
    out.corner_coords.resize(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) {
        require(sigma[j] >= 0.0 && sigma[j] <= 1.0, ErrorKind::invalid_argument,
                "randomized_grid_round: shift outside [0, 1]");
        out.corner_coords[j] = static_cast<std::int64_t>(std::floor((y[j] + cell_side * sigma[j]) / cell_side));
    }
    return out;
}

} // namespace msketch
