#include "msketch/euclid.hpp"

#include "msketch/error.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace msketch {

namespace {

constexpr double kTreeEps = 0.5;
constexpr double kBallSlack = 1e-9;

std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

JlConfig JlConfig::for_points(std::size_t n, double eps, std::uint64_t seed)
{
    require(eps > 0.0 && eps < 1.0, ErrorKind::invalid_argument, "eps must lie in (0, 1)");
    const double raw = 3.0 / (eps * eps) * std::log2(static_cast<double>(std::max<std::size_t>(n, 1)));
    JlConfig cfg;
    cfg.target_dim = std::max<std::size_t>(static_cast<std::size_t>(std::ceil(raw)), 1);
    cfg.seed = seed;
    cfg.eps = eps;
    return cfg;
}

SeedStreams SeedStreams::split(std::uint64_t seed)
{
    std::uint64_t state = seed;
    SeedStreams s;
    s.matrix = splitmix64(state);
    s.shift1 = splitmix64(state);
    s.shift2 = splitmix64(state);
    return s;
}

PointSet project_points(const PointSet& ps, const JlConfig& cfg)
{
    require(ps.p == NormOrder::finite(2), ErrorKind::invalid_argument, "projection needs the Euclidean norm");
    require(cfg.target_dim >= 1, ErrorKind::invalid_argument, "target dimension must be positive");
    const std::size_t k = cfg.target_dim;
    const std::size_t d = ps.d;
    std::mt19937_64 rng(SeedStreams::split(cfg.seed).matrix);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(k)));
    std::vector<double> m(k * d);
    for (auto& e : m) {
        e = normal(rng);
    }

    PointSet out;
    out.n = ps.n;
    out.d = k;
    out.p = ps.p;
    out.coords.assign(ps.n * k, 0.0);
    for (std::size_t i = 0; i < ps.n; ++i) {
        const auto x = ps.row(i);
        auto y = out.row(i);
        for (std::size_t r = 0; r < k; ++r) {
            const double* row = m.data() + r * d;
            double acc = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                acc += row[c] * x[c];
            }
            y[r] = acc;
        }
    }

    out.scale_exponent = ps.scale_exponent;
    return out;
}

PointSet jl_transform(const PointSet& ps, const JlConfig& cfg)
{
    PointSet out = project_points(ps, cfg);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t i = 0; i < out.n; ++i) {
        for (std::size_t j = i + 1; j < out.n; ++j) {
            const double dij = out.distance(i, j);
            lo = std::min(lo, dij);
            hi = std::max(hi, dij);
        }
    }
    int shift = 0;
    if (out.n >= 2) {
        require(lo > 0.0, ErrorKind::precondition, "projection collapsed two points");
        shift = static_cast<int>(std::floor(std::log2(lo)));
        // log2 can land one off near exact powers of two.
        while (std::ldexp(lo, -shift) < 1.0) {
            --shift;
        }
        while (std::ldexp(lo, -shift) >= 2.0) {
            ++shift;
        }
        for (auto& c : out.coords) {
            c = std::ldexp(c, -shift);
        }
    }
    out.scale_exponent += shift;
    out.phi = out.n >= 2 ? std::ldexp(hi, -shift) : 1.0;
    return out;
}

std::vector<double> draw_shift(std::uint64_t stream_seed, std::size_t d)
{
    std::mt19937_64 rng(stream_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> sigma(d);
    for (auto& s : sigma) {
        s = unit(rng);
    }
    return sigma;
}

Augmentations build_augmentations(const RelativeLocationTree& t, const std::vector<double>& sigma1,
                                  const std::vector<double>& sigma2)
{
    const SketchTree& s = t.sketch;
    const std::size_t d = t.points.d;
    require(sigma1.size() == d && sigma2.size() == d, ErrorKind::invalid_argument, "shift dimension mismatch");
    require(t.points.p == NormOrder::finite(2), ErrorKind::invalid_argument, "augmentations need the Euclidean norm");
    const double rd = std::sqrt(static_cast<double>(d));
    const std::array<const std::vector<double>*, 2> sigmas{&sigma1, &sigma2};

    Augmentations aug;
    aug.surrogate.resize(s.nodes.size());
    aug.long_edge.resize(s.nodes.size());
    std::vector<double> y(d);
    for (NodeId v : s.subtree_leaves) {
        const auto xc = t.points.row(s.nodes[v].center);
        const auto sv = t.surrogate(v);
        const double scale = std::ldexp(1.0, s.nodes[v].level);
        for (std::size_t j = 0; j < d; ++j) {
            y[j] = xc[j] - sv[j];
        }
        require(lp_norm(y, t.points.p) <= scale * (1.0 + kBallSlack), ErrorKind::internal,
                "surrogate displacement exceeds 2^level");
        for (int c = 0; c < 2; ++c) {
            aug.surrogate[v][c] = randomized_grid_round(y, scale / rd, *sigmas[c]).corner_coords;
        }

        const NodeId top = s.long_edge_top(v);
        if (top == kNoNode) {
            continue;
        }
        const auto xu = t.points.row(s.nodes[top].center);
        const double top_scale = std::ldexp(1.0, s.nodes[top].level);
        for (std::size_t j = 0; j < d; ++j) {
            y[j] = xc[j] - xu[j];
        }
        require(lp_norm(y, t.points.p) <= top_scale * (1.0 + kBallSlack), ErrorKind::internal,
                "long-edge displacement exceeds 2^level");
        for (int c = 0; c < 2; ++c) {
            aug.long_edge[v][c] = randomized_grid_round(y, top_scale / rd, *sigmas[c]).corner_coords;
        }
    }
    return aug;
}

EuclideanSketch build_euclidean_sketch(const PointSet& ps, double eps, std::uint64_t seed)
{
    const JlConfig cfg = JlConfig::for_points(ps.n, eps, seed);
    const PointSet projected = jl_transform(ps, cfg);
    EuclideanSketch out{build_tree(projected, kTreeEps), {}};
    const SeedStreams streams = SeedStreams::split(seed);
    const auto sigma1 = draw_shift(streams.shift1, cfg.target_dim);
    const auto sigma2 = draw_shift(streams.shift2, cfg.target_dim);
    out.tree.sketch.augmentations = build_augmentations(out.tree, sigma1, sigma2);
    out.tree.sketch.header.kind = SketchKind::euclidean;
    out.bits = encode(out.tree.sketch);
    return out;
}

} // namespace msketch
