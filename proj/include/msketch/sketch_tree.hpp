#pragma once

#include "msketch/metric_core.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace msketch {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

/// eps = numerator / 2^exponent, so encoder and decoder agree bit for bit.
struct Dyadic {
    std::uint32_t numerator = 1;
    std::uint32_t exponent = 1;

    double value() const;
    /// Largest dyadic with a 31-bit numerator that does not exceed eps, reduced.
    static Dyadic from_below(double eps);

    friend bool operator==(const Dyadic&, const Dyadic&) = default;
};

enum class SketchKind : std::uint8_t { lp = 0, euclidean = 1 };

enum class EdgeKind : std::uint8_t { none = 0, short_edge = 1, long_edge = 2 };

struct SketchHeader {
    std::uint64_t n = 0;
    std::uint64_t d = 0;
    NormOrder p;
    Dyadic eps;
    std::int64_t scale_exponent = 0;
    /// Level of the root: the smallest P with 2^P >= diameter at which every point is merged.
    std::uint64_t phi_exponent = 0;
    SketchKind kind = SketchKind::lp;

    friend bool operator==(const SketchHeader&, const SketchHeader&) = default;
};

struct SketchNode {
    NodeId parent = kNoNode;
    std::vector<NodeId> children;
    int level = 0;
    EdgeKind edge = EdgeKind::none; // edge to the parent
    std::uint32_t long_length = 0;  // original 1-path length k of a long edge
    std::uint32_t center = 0;
    NodeId ingress = kNoNode;
    std::uint64_t gamma_inv = 0; // 1/gamma(v) = 5 + ceil(diam / 2^level); 0 at subtree roots
    std::vector<std::int64_t> eta;
    std::vector<std::int64_t> eta_eps;

    friend bool operator==(const SketchNode&, const SketchNode&) = default;
};

/// Explicitly stored shifted surrogate, in units of d^{-1/p}.
struct Landmark {
    NodeId node = kNoNode;
    std::vector<std::int64_t> units;

    friend bool operator==(const Landmark&, const Landmark&) = default;
};

/// Randomized grid corners for subtree leaves, two independent copies each.
/// corner[v][copy] is empty for nodes outside L(T); long_edge[v] is empty when
/// the subtree of v hangs off the root of T.
struct Augmentations {
    std::vector<std::array<std::vector<std::int64_t>, 2>> surrogate;
    std::vector<std::array<std::vector<std::int64_t>, 2>> long_edge;

    friend bool operator==(const Augmentations&, const Augmentations&) = default;
};

/// Everything the sketch bitstring carries, in preorder (root = node 0).
struct SketchTree {
    SketchHeader header;
    std::vector<SketchNode> nodes;
    std::vector<Landmark> landmarks; // non-root landmarks, ascending node id
    std::optional<Augmentations> augmentations;

    // Derived from `nodes` by derive(); not serialized.
    std::vector<NodeId> subtree_root;
    std::vector<std::uint8_t> subtree_leaf;
    std::vector<NodeId> leaf_of_point;
    std::vector<NodeId> subtree_leaves; // L(T) in preorder

    void derive();

    bool is_subtree_root(NodeId v) const { return subtree_root[v] == v; }
    bool is_subtree_leaf(NodeId v) const { return subtree_leaf[v] != 0; }
    double root_dim() const { return msketch::root_dim(header.d, header.p); }

    /// Top node of the long edge above the subtree containing v, or kNoNode
    /// when that subtree contains the root of T.
    NodeId long_edge_top(NodeId v) const;

    /// Landmark spacing K = ceil(log2(2 * 2^phi_exponent * d^{1/p})).
    unsigned landmark_stride() const;

    friend bool operator==(const SketchTree& a, const SketchTree& b)
    {
        return a.header == b.header && a.nodes == b.nodes && a.landmarks == b.landmarks &&
               a.augmentations == b.augmentations;
    }
};

/// Increment of a shifted leaf surrogate, in units of d^{-1/p}: 2^level * g * eps.
double fine_increment(std::int64_t g, int level, Dyadic eps);

} // namespace msketch
