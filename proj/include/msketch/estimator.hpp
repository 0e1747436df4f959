#pragma once

#include "msketch/codec.hpp"
#include "msketch/sketch_tree.hpp"

#include <atomic>
#include <cstdint>
#include <vector>

namespace msketch {

/// Distance queries against a decoded sketch. An lp sketch built at eps answers
/// within a factor (1 +- 4 eps) of the true distance; the factor is not folded
/// into eps. Immutable after construction, so concurrent queries are safe.
class QueryContext {
public:
    /// With `cache` set every shifted surrogate is computed up front. Without it,
    /// each query walks ingress links to the nearest landmark or subtree root.
    explicit QueryContext(SketchTree tree, bool cache = true);
    explicit QueryContext(const SketchBits& bits, bool cache = true) : QueryContext(decode(bits), cache) {}

    const SketchTree& tree() const noexcept { return tree_; }

    /// s(v) in units of d^{-1/p}.
    std::vector<std::int64_t> shifted_surrogate(NodeId v) const;
    /// s_eps(v) in units of d^{-1/p}; v must be in L(T).
    std::vector<double> shifted_leaf_surrogate(NodeId v) const;

    /// Lowest common ancestor by walking parent links.
    NodeId lca(NodeId a, NodeId b) const;

    struct QueryPath {
        NodeId meet = kNoNode;             // u_ij
        NodeId top_i = kNoNode;            // v_i
        NodeId top_j = kNoNode;            // v_j
        std::vector<NodeId> below_i;       // L(T) nodes strictly below v_i towards leaf(x_i)
        std::vector<NodeId> below_j;
    };
    QueryPath query_path(std::uint64_t i, std::uint64_t j) const;

    /// Estimate in the caller's original units (the sketch's scale is undone).
    double estimate_lp(std::uint64_t i, std::uint64_t j) const;
    double estimate_euclidean(std::uint64_t i, std::uint64_t j) const;
    /// Dispatches on the sketch kind.
    double estimate(std::uint64_t i, std::uint64_t j) const;

    /// X_i for point i relative to the subtree root over v_i, in units of 1/sqrt(d).
    /// copy is 0 or 1. `path_top` and `below` come from query_path.
    std::vector<double> probabilistic_surrogate(NodeId path_top, const std::vector<NodeId>& below, int copy) const;

    /// Z1 . Z2 in the sketch's internal scale (squared distance, units of 1).
    double inner_product(std::uint64_t i, std::uint64_t j) const;

    /// Number of tree nodes read by queries since the last reset.
    std::uint64_t visits() const noexcept { return visits_.load(std::memory_order_relaxed); }
    void reset_visits() const noexcept { visits_.store(0, std::memory_order_relaxed); }

private:
    void touch(std::uint64_t count = 1) const { visits_.fetch_add(count, std::memory_order_relaxed); }
    void check_pair(std::uint64_t i, std::uint64_t j) const;

    SketchTree tree_;
    bool cached_;
    double rd_;
    std::vector<std::int32_t> landmark_index_;
    std::vector<std::vector<std::int64_t>> coarse_;
    std::vector<std::vector<double>> fine_;
    mutable std::atomic<std::uint64_t> visits_{0};
};

} // namespace msketch
