// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include "msketch/bit_stream.hpp"
#include "msketch/codec.hpp"
#include "msketch/estimator.hpp"
#include "msketch/euclid.hpp"
#include "msketch/harness.hpp"
#include "msketch/tree_builder.hpp"
#include "tree_checks.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace msketch;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

PointSet random_instance(std::mt19937_64& rng, std::size_t n, std::size_t d, NormOrder p, bool gaussian)
{
    PointSet ps;
    ps.n = n;
    ps.d = d;
    ps.p = p;
    ps.coords.resize(n * d);
    std::normal_distribution<double> normal(0.0, 25.0);
    std::uniform_real_distribution<double> unit(0.0, 100.0);
    for (auto& c : ps.coords) {
        c = gaussian ? normal(rng) : unit(rng);
    }
    scale_points(ps);
    return ps;
}

double original_distance(const PointSet& ps, std::size_t i, std::size_t j)
{
    return std::ldexp(ps.distance(i, j), static_cast<int>(ps.scale_exponent));
}

// 1. Every lp estimate within (1 +- 4 eps).
Outcome lp_correctness()
{
    const auto start = Clock::now();
    std::mt19937_64 rng(1001);
    std::uint64_t pairs = 0;
    std::uint64_t bad = 0;
    double worst = 0.0;
    int instances = 0;
    for (std::size_t n : {100u, 500u}) {
        for (std::size_t d : {5u, 20u}) {
            for (NormOrder p : {NormOrder::finite(1), NormOrder::finite(2), NormOrder::infinity()}) {
                for (double eps : {0.25, 0.1}) {
                    for (int rep = 0; rep < 20; ++rep) {
                        const PointSet ps = random_instance(rng, n, d, p, rep % 2 == 0);
                        const QueryContext ctx(encode(build_tree(ps, eps).sketch));
                        for (std::size_t i = 0; i < n; ++i) {
                            for (std::size_t j = i + 1; j < n; ++j) {
                                const double exact = original_distance(ps, i, j);
                                const double rel = std::abs(ctx.estimate_lp(i, j) - exact) / exact;
                                worst = std::max(worst, rel / eps);
                                bad += rel > 4 * eps;
                                ++pairs;
                            }
                        }
                        ++instances;
                    }
                }
            }
        }
    }
    return {bad == 0, fmt("%d instances, %llu pairs, %llu outside the band, worst error %.3f eps, %.1f s", instances,
                          static_cast<unsigned long long>(pairs), static_cast<unsigned long long>(bad), worst,
                          seconds_since(start))};
}

// 2. General metrics through the max-norm embedding, plus exact recovery.
Outcome general_metrics()
{
    const auto start = Clock::now();
    const double eps = 1.0 / 8;
    const std::size_t n = 200;
    std::uint64_t bad = 0;
    std::uint64_t wrong = 0;
    std::uint64_t pairs = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const LowerBoundGeneral lb = gen_lowerbound_general(n, eps, seed);
        lb.metric.validate(true);
        PointSet ps = embed_general_metric(lb.metric);
        scale_points(ps);
        const QueryContext coarse(encode(build_tree(ps, eps).sketch));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double exact = lb.metric(i, j);
                bad += std::abs(coarse.estimate(i, j) - exact) > 4 * eps * exact;
                ++pairs;
            }
        }
        // (1 +- eps/4) needs the sketch at eps/16.
        const QueryContext fine(encode(build_tree(ps, eps / 16).sketch));
        const auto k = recover_general([&](std::uint64_t i, std::uint64_t j) { return fine.estimate(i, j); }, n, eps);
        for (std::size_t t = 0; t < k.size(); ++t) {
            wrong += k[t] != lb.k[t];
        }
    }
    return {bad == 0 && wrong == 0,
            fmt("5 metrics, %llu pairs, %llu outside (1 +- 4eps), %llu of %llu planted values wrong, %.1f s",
                static_cast<unsigned long long>(pairs), static_cast<unsigned long long>(bad),
                static_cast<unsigned long long>(wrong), static_cast<unsigned long long>(5 * n * n),
                seconds_since(start))};
}

PointSet exponential_chain(std::size_t n, double top, std::size_t d)
{
    PointSet ps;
    ps.n = n;
    ps.d = d;
    ps.p = NormOrder::finite(2);
    ps.coords.assign(n * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        ps.coords[i * d] = static_cast<double>(i) + std::exp2(top * static_cast<double>(i) / static_cast<double>(n - 1)) - 1;
    }
    scale_points(ps);
    return ps;
}

// 3. Proved structural bounds, node by node.
Outcome tree_invariants()
{
    const auto start = Clock::now();
    std::mt19937_64 rng(3003);
    std::uniform_int_distribution<std::size_t> size(2, 300);
    const NormOrder orders[] = {NormOrder::finite(1), NormOrder::finite(2), NormOrder::finite(3),
                                NormOrder::infinity()};
    const double epsilons[] = {0.5, 0.25, 0.1, 0.05, 0.01};
    std::size_t violations = 0;
    std::string first;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = size(rng);
        const std::size_t d = 1 + static_cast<std::size_t>(trial % 7) * 3;
        const NormOrder p = orders[trial % 4];
        const double eps = epsilons[trial % 5];
        PointSet ps;
        switch (trial % 4) {
        case 0:
            ps = msketch::testing::clustered_points(rng, n, d, p);
            break;
        case 1:
            ps = exponential_chain(n, 30, 1);
            break;
        default:
            ps = random_instance(rng, n, d, p, trial % 2 == 0);
        }
        const auto bad = msketch::testing::check_tree_invariants(build_tree(ps, eps));
        violations += bad.size();
        if (!bad.empty() && first.empty()) {
            first = " (first: " + bad.front() + ")";
        }
    }
    return {violations == 0, fmt("100 instances, %zu violations%s, %.1f s", violations, first.c_str(),
                                 seconds_since(start))};
}

// 4. Euclidean concentration of Z1 . Z2.
Outcome euclidean_concentration()
{
    const auto start = Clock::now();
    const std::size_t n = 1000;
    const double eps = 0.2;
    std::mt19937_64 rng(4004);
    PointSet ps = random_instance(rng, n, 50, NormOrder::finite(2), true);
    double worst_fraction = 1.0;
    std::size_t dim = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const EuclideanSketch e = build_euclidean_sketch(ps, eps, seed);
        dim = e.tree.points.d;
        const QueryContext ctx(e.bits);
        const double unit = std::ldexp(1.0, 2 * static_cast<int>(ctx.tree().header.scale_exponent));
        std::uint64_t good = 0;
        std::uint64_t pairs = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double exact = original_distance(ps, i, j);
                const double z = ctx.inner_product(i, j) * unit;
                good += std::abs(z - exact * exact) <= 48 * eps * exact * exact;
                ++pairs;
            }
        }
        worst_fraction = std::min(worst_fraction, static_cast<double>(good) / static_cast<double>(pairs));
    }
    return {worst_fraction >= 0.999 && dim == 748,
            fmt("d' = %zu, worst seed keeps %.5f of pairs within 48 eps, %.1f s", dim, worst_fraction,
                seconds_since(start))};
}

// 5. Randomized rounding is unbiased.
Outcome rounding_unbiased()
{
    const auto start = Clock::now();
    std::mt19937_64 rng(5005);
    std::normal_distribution<double> normal(0.0, 3.0);
    const std::size_t d = 8;
    const int trials = 100000;
    int outside = 0;
    double worst = 0.0;
    for (int v = 0; v < 10; ++v) {
        std::vector<double> y(d);
        for (auto& c : y) {
            c = normal(rng);
        }
        const double cell = std::ldexp(1.0, v - 4) / std::sqrt(static_cast<double>(d));
        std::vector<double> sum(d, 0.0);
        std::vector<double> sq(d, 0.0);
        std::mt19937_64 shifts(9000 + v);
        std::uniform_real_distribution<double> unit;
        std::vector<double> sigma(d);
        for (int t = 0; t < trials; ++t) {
            for (auto& s : sigma) {
                s = unit(shifts);
            }
            const auto corner = randomized_grid_round(y, cell, sigma).value();
            for (std::size_t j = 0; j < d; ++j) {
                sum[j] += corner[j];
                sq[j] += corner[j] * corner[j];
            }
        }
        for (std::size_t j = 0; j < d; ++j) {
            const double mean = sum[j] / trials;
            const double se = std::sqrt(std::max(0.0, sq[j] / trials - mean * mean) / trials);
            const double z = se > 0 ? std::abs(mean - y[j]) / se : (mean == y[j] ? 0.0 : INFINITY);
            worst = std::max(worst, z);
            outside += z > 4.0;
        }
    }
    return {outside == 0, fmt("10 vectors x %zu coordinates, largest deviation %.2f standard errors, %.1f s", d, worst,
                              seconds_since(start))};
}

SizeReport expected_sizes(const SketchTree& t)
{
    SizeReport r;
    const std::size_t count = t.nodes.size();
    r.header = 54 * 8 + 9 * 64;
    r.topology = 2 * count;
    r.long_edges = count - 1;
    r.centers = count * index_width(t.header.n);
    r.ingresses = 2 * count;
    auto coords = [](const std::vector<std::int64_t>& v) {
        std::uint64_t bits = 0;
        for (std::int64_t x : v) {
            bits += gamma_length(zigzag(x) + 1);
        }
        return bits;
    };
    for (NodeId v = 0; v < count; ++v) {
        const SketchNode& node = t.nodes[v];
        if (node.edge == EdgeKind::long_edge) {
            r.long_edges += gamma_length(node.long_length);
        }
        if (node.ingress != v && node.ingress != node.parent) {
            r.ingresses += index_width(t.subtree_leaves.size());
        }
        if (!t.is_subtree_root(v)) {
            r.gammas += gamma_length(node.gamma_inv);
            r.etas += coords(node.eta);
            if (t.is_subtree_leaf(v)) {
                r.leaf_etas += coords(node.eta_eps);
            }
        }
    }
    r.landmarks = gamma_length(t.landmarks.size() + 1) +
                  t.landmarks.size() * (index_width(count) + t.header.d * (t.landmark_stride() + 1));
    if (t.augmentations) {
        for (NodeId v : t.subtree_leaves) {
            for (int c = 0; c < 2; ++c) {
                r.augmentations += coords(t.augmentations->surrogate[v][c]) + coords(t.augmentations->long_edge[v][c]);
            }
        }
    }
    return r;
}

std::uint64_t padded_bytes(const SizeReport& r)
{
    std::uint64_t bytes = r.header / 8;
    for (std::uint64_t s : {r.topology, r.long_edges, r.centers, r.ingresses, r.gammas, r.etas, r.leaf_etas,
                            r.landmarks, r.augmentations}) {
        bytes += (s + 7) / 8;
    }
    return bytes;
}

// Distinct lattice points in {0..side}^2 with two fixed unit-spaced points and the
// two far corners, so the aspect ratio does not depend on n.
PointSet lattice_instance(std::mt19937_64& rng, std::size_t n, std::int64_t side)
{
    std::set<std::pair<std::int64_t, std::int64_t>> chosen{{0, 0}, {1, 0}, {side, side}, {side - 1, side}};
    std::uniform_int_distribution<std::int64_t> pick(0, side);
    while (chosen.size() < n) {
        chosen.insert({pick(rng), pick(rng)});
    }
    PointSet ps;
    ps.n = n;
    ps.d = 2;
    ps.p = NormOrder::finite(2);
    for (const auto& [x, y] : chosen) {
        ps.coords.push_back(static_cast<double>(x));
        ps.coords.push_back(static_cast<double>(y));
    }
    scale_points(ps);
    return ps;
}

// 6. Codec exactness, accounting, and growth in n.
Outcome codec()
{
    const auto start = Clock::now();
    std::mt19937_64 rng(6006);
    std::uniform_int_distribution<std::size_t> size(2, 150);
    const NormOrder orders[] = {NormOrder::finite(1), NormOrder::finite(2), NormOrder::infinity()};
    int mismatched = 0;
    int misaccounted = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = size(rng);
        const bool euclid = trial % 2 == 1;
        SketchTree tree;
        SketchBits bits;
        if (euclid) {
            const PointSet ps = random_instance(rng, n, 4 + trial % 5, NormOrder::finite(2), trial % 4 == 1);
            EuclideanSketch e = build_euclidean_sketch(ps, 0.3 + 0.05 * (trial % 5), 77 + trial);
            tree = std::move(e.tree.sketch);
            bits = std::move(e.bits);
        } else {
            const PointSet ps = trial % 6 == 0 ? msketch::testing::clustered_points(rng, n, 3, orders[trial % 3])
                                               : random_instance(rng, n, 1 + trial % 9, orders[trial % 3], trial % 4 == 0);
            tree = build_tree(ps, 0.02 + 0.01 * (trial % 20)).sketch;
            bits = encode(tree);
        }
        mismatched += !(decode(bits) == tree);
        const SizeReport got = size_report(bits);
        const SizeReport want = expected_sizes(tree);
        const bool same = got.header == want.header && got.topology == want.topology &&
                          got.long_edges == want.long_edges && got.centers == want.centers &&
                          got.ingresses == want.ingresses && got.gammas == want.gammas && got.etas == want.etas &&
                          got.leaf_etas == want.leaf_etas && got.landmarks == want.landmarks &&
                          got.augmentations == want.augmentations;
        misaccounted += !same || got.total() != bits.bit_length() || padded_bytes(got) != bits.bytes().size();
    }

    double worst_ratio = 0.0;
    std::vector<double> totals;
    for (std::size_t n : {250u, 500u, 1000u}) {
        double sum = 0.0;
        for (int rep = 0; rep < 3; ++rep) {
            std::mt19937_64 g(600 + rep * 31 + n);
            const PointSet ps = lattice_instance(g, n, 1023);
            sum += static_cast<double>(size_report(encode(build_tree(ps, 0.1).sketch)).total());
        }
        totals.push_back(sum / 3);
    }
    for (std::size_t k = 1; k < totals.size(); ++k) {
        worst_ratio = std::max(worst_ratio, totals[k] / totals[k - 1]);
    }
    return {mismatched == 0 && misaccounted == 0 && worst_ratio <= 2.3,
            fmt("200 trees: %d round-trip mismatches, %d accounting mismatches; bits at n = 250/500/1000: "
                "%.0f/%.0f/%.0f, worst doubling ratio %.3f, %.1f s",
                mismatched, misaccounted, totals[0], totals[1], totals[2], worst_ratio, seconds_since(start))};
}

// 7. Exact recovery of the planted bits from a Euclidean sketch at eps/8.
Outcome lower_bound_recovery()
{
    const auto start = Clock::now();
    const std::size_t n = 64;
    const double eps = 0.25;
    std::uint64_t wrong = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        LowerBoundEuclidean lb = gen_lowerbound_euclidean(n, eps, seed);
        scale_points(lb.points);
        const EuclideanSketch e = build_euclidean_sketch(lb.points, eps / 8, seed);
        const QueryContext ctx(e.bits);
        const auto bits = recover_bits([&](std::uint64_t i, std::uint64_t j) { return ctx.estimate(i, j); }, n, eps);
        for (std::size_t t = 0; t < bits.size(); ++t) {
            wrong += bits[t] != lb.bits[t];
        }
    }
    return {wrong == 0, fmt("3 seeds x 4096 bits, %llu wrong, %.1f s", static_cast<unsigned long long>(wrong),
                            seconds_since(start))};
}

// 8. Query cost stays within 4K node visits on deep instances.
Outcome query_cost()
{
    const auto start = Clock::now();
    PointSet line;
    line.n = 500;
    line.d = 1;
    line.p = NormOrder::finite(2);
    for (int i = 0; i < 499; ++i) {
        line.coords.push_back(i);
    }
    line.coords.push_back(std::ldexp(1.0, 40));
    scale_points(line);

    PointSet zigzag = line;
    zigzag.d = 2;
    zigzag.coords.clear();
    for (int i = 0; i < 499; ++i) {
        zigzag.coords.push_back(i);
        zigzag.coords.push_back(i % 2 ? 0.75 : 0.0);
    }
    zigzag.coords.push_back(std::ldexp(1.0, 40));
    zigzag.coords.push_back(0.0);
    scale_points(zigzag);

    const std::vector<std::pair<const char*, PointSet>> instances{
        {"line", line}, {"zigzag", zigzag}, {"geometric", exponential_chain(500, 40, 1)}};
    bool pass = true;
    std::string detail;
    for (const auto& [name, ps] : instances) {
        for (double eps : {0.25, 0.05}) {
            const RelativeLocationTree t = build_tree(ps, eps);
            const QueryContext ctx(encode(t.sketch), false);
            const unsigned k = t.sketch.landmark_stride();
            std::uint64_t worst = 0;
            for (std::uint64_t i = 0; i < ps.n; ++i) {
                for (std::uint64_t j = i + 1; j < ps.n; ++j) {
                    ctx.reset_visits();
                    (void)ctx.estimate_lp(i, j);
                    worst = std::max(worst, ctx.visits());
                }
            }
            pass = pass && worst <= 4ull * k;
            detail += fmt("%s eps %.2f: %llu of %u; ", name, eps, static_cast<unsigned long long>(worst), 4 * k);
        }
    }
    return {pass, "max visits per query " + detail + fmt("%.1f s", seconds_since(start))};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"lp correctness", lp_correctness},
        {"general metrics", general_metrics},
        {"tree invariants", tree_invariants},
        {"euclidean concentration", euclidean_concentration},
        {"rounding unbiasedness", rounding_unbiased},
        {"codec", codec},
        {"lower-bound recovery", lower_bound_recovery},
        {"query cost", query_cost},
    };
    std::set<int> wanted;
    for (int a = 1; a < argc; ++a) {
        wanted.insert(std::atoi(argv[a]));
    }
    int failed = 0;
    for (std::size_t c = 0; c < criteria.size(); ++c) {
        const int id = static_cast<int>(c) + 1;
        if (!wanted.empty() && !wanted.count(id)) {
            continue;
        }
        Outcome o;
        try {
            o = criteria[c].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %d %s: %s | %s\n", id, criteria[c].first, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
