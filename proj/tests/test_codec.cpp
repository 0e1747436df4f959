#include <doctest.h>

#include "msketch/bit_stream.hpp"
#include "msketch/codec.hpp"
#include "msketch/error.hpp"
#include "msketch/euclid.hpp"
#include "msketch/tree_builder.hpp"
#include "tree_checks.hpp"

#include <random>

using namespace msketch;

namespace {

PointSet line(std::vector<double> xs)
{
    PointSet ps;
    ps.n = xs.size();
    ps.d = 1;
    ps.p = NormOrder::finite(2);
    ps.coords = std::move(xs);
    return ps;
}

// Offset of the first section payload: fixed header plus one length field.
constexpr std::size_t kTopologyOffset = 54 + 8;

} // namespace

TEST_CASE("single point sketch")
{
    const RelativeLocationTree t = build_tree(line({3}), 0.25);
    const SketchBits bits = encode(t.sketch);
    const SizeReport r = size_report(bits);
    CHECK(r.topology == 2);
    CHECK(r.centers == 0);
    CHECK(r.long_edges == 0);
    CHECK(r.gammas == 0);
    CHECK(r.etas == 0);
    CHECK(r.leaf_etas == 0);
    CHECK(r.augmentations == 0);
    CHECK(r.header == 54 * 8 + 9 * 64);
    CHECK(decode(bits) == t.sketch);
}

TEST_CASE("round trip on {0, 1, 10}")
{
    const RelativeLocationTree t = build_tree(line({0, 1, 10}), 0.5);
    const SketchBits bits = encode(t.sketch);
    const SketchTree back = decode(bits);
    CHECK(back == t.sketch);
    for (NodeId v = 0; v < back.nodes.size(); ++v) {
        CHECK(back.nodes[v].level == t.sketch.nodes[v].level);
    }
    const SizeReport r = size_report(bits);
    CHECK(r.topology == 14);
    CHECK(r.centers == 7 * 2);
    CHECK(r.ingresses == 7 * 2 + 2 * index_width(5));
    CHECK(encode(back) == bits);
}

TEST_CASE("decode rejects damaged input")
{
    const RelativeLocationTree t = build_tree(line({0, 1, 10}), 0.5);
    const SketchBits bits = encode(t.sketch);

    auto damaged = bits.bytes();
    damaged[0] = 'X';
    CHECK_THROWS_WITH_AS(decode(SketchBits(damaged)), "bad sketch magic", Error);

    damaged = bits.bytes();
    damaged[4] = 2;
    CHECK_THROWS_WITH_AS(decode(SketchBits(damaged)), "unsupported sketch version", Error);

    damaged = bits.bytes();
    damaged.pop_back();
    CHECK_THROWS_AS(decode(SketchBits(damaged)), Error);

    damaged = bits.bytes();
    damaged.resize(30);
    CHECK_THROWS_AS(decode(SketchBits(damaged)), Error);

    damaged = bits.bytes();
    damaged[kTopologyOffset] ^= 1; // the root's opening parenthesis
    CHECK_THROWS_WITH_AS(decode(SketchBits(damaged)), "parenthesis imbalance", Error);

    try {
        damaged = bits.bytes();
        damaged[0] = 'X';
        (void)decode(SketchBits(damaged));
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::decode);
    }
}

TEST_CASE("round trip and accounting on random lp trees")
{
    std::mt19937_64 rng(99);
    const NormOrder orders[] = {NormOrder::finite(1), NormOrder::finite(2), NormOrder::infinity()};
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 2 + trial * 3;
        const PointSet ps = trial % 4 == 0 ? msketch::testing::clustered_points(rng, n, 1 + trial % 3, orders[trial % 3])
                                           : msketch::testing::random_points(rng, n, 1 + trial % 5, orders[trial % 3]);
        const RelativeLocationTree t = build_tree(ps, trial % 2 ? 0.05 : 0.3);
        const SketchBits bits = encode(t.sketch);
        const SketchTree back = decode(bits);
        CHECK(back == t.sketch);
        const SizeReport r = size_report(bits);
        CHECK(r.total() == bits.bit_length());
        CHECK(r.total() <= bits.bytes().size() * 8);
        CHECK(r.centers == t.sketch.nodes.size() * index_width(n));
        CHECK(r.augmentations == 0);
        std::size_t long_edges = 0;
        for (const auto& node : t.sketch.nodes) {
            long_edges += node.edge == EdgeKind::long_edge;
        }
        CHECK(r.long_edges <= (t.sketch.nodes.size() - 1) + 2 * n * gamma_length(t.sketch.header.phi_exponent + 1));
        CHECK(long_edges <= 2 * n);
    }
}

TEST_CASE("round trip on euclidean sketches")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const PointSet ps = msketch::testing::random_points(rng, 20 + trial, 8, NormOrder::finite(2));
        const EuclideanSketch e = build_euclidean_sketch(ps, 0.3, 100 + trial);
        const SketchTree back = decode(e.bits);
        CHECK(back == e.tree.sketch);
        REQUIRE(back.augmentations.has_value());
        for (NodeId v : back.subtree_leaves) {
            CHECK(back.augmentations->surrogate[v][0].size() == back.header.d);
            CHECK(back.augmentations->surrogate[v][1].size() == back.header.d);
            const bool has_long = back.long_edge_top(v) != kNoNode;
            CHECK(back.augmentations->long_edge[v][0].size() == (has_long ? back.header.d : 0));
            CHECK(back.augmentations->long_edge[v][1].size() == (has_long ? back.header.d : 0));
        }
        const SizeReport r = size_report(e.bits);
        CHECK(r.augmentations > 0);
        CHECK(r.total() == e.bits.bit_length());
    }
}

TEST_CASE("encode refuses a euclidean header without augmentations")
{
    RelativeLocationTree t = build_tree(line({0, 1, 10}), 0.5);
    t.sketch.header.kind = SketchKind::euclidean;
    CHECK_THROWS_AS(encode(t.sketch), Error);
}

TEST_CASE("save and load")
{
    const RelativeLocationTree t = build_tree(line({0, 1, 10, 11, 40}), 0.25);
    const SketchBits bits = encode(t.sketch);
    const std::string path = "codec_roundtrip.rlts";
    bits.save(path);
    CHECK(SketchBits::load(path) == bits);
    CHECK_THROWS_AS(SketchBits::load("does/not/exist.rlts"), Error);
}
