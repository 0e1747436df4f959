#pragma once

#include "msketch/metric_core.hpp"
#include "msketch/sketch_tree.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace msketch {

/// Dense symmetric matrix of exact pairwise distances.
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    explicit DistanceMatrix(const PointSet& ps);

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
    double min_distance() const;
    double max_distance() const;

private:
    std::size_t n_ = 0;
    std::vector<double> values_;
};

/// The uncompressed hierarchy T*, stored by its branching nodes. A node at
/// level a whose parent sits at level b stands for the b - a tree nodes at
/// levels a .. b-1 that share its cluster.
struct MergeNode {
    int level = 0;
    std::uint32_t parent = UINT32_MAX;
    std::vector<std::uint32_t> children; // ascending minimum member
    std::vector<std::uint32_t> members;
    double diameter = 0.0;
};

struct MergeTree {
    std::vector<MergeNode> nodes; // leaves are nodes 0..n-1, leaf i holds point i
    std::uint32_t root = 0;
    int root_level = 0; // T* root level; >= nodes[root].level

    /// Number of nodes of the explicit T*.
    std::size_t expanded_size() const;
    /// Sum over T* nodes of 2^{-level} * diameter.
    double scaled_diameter_sum() const;
};

/// Relative location tree with its builder-only annotations.
struct RelativeLocationTree {
    SketchTree sketch;
    PointSet points;
    MergeTree hierarchy;
    DistanceMatrix distances;
    double eps_requested = 0.0;

    // Per node of T, indexed like sketch.nodes.
    std::vector<double> diameter;
    std::vector<std::uint32_t> leaf_begin;
    std::vector<std::uint32_t> leaf_end;
    std::vector<std::vector<NodeId>> tau_order; // children in DFS order on the spanning tree of H_v
    std::vector<std::vector<std::int64_t>> surrogate_units; // s(v) in units of d^{-1/p}
    std::vector<std::vector<double>> leaf_surrogate_units;  // s_eps(v), L(T) nodes only
    std::vector<NodeId> landmark_nodes;                      // includes subtree roots reached by climbing

    std::vector<std::uint32_t> leaf_order; // point indices in leaf preorder
    std::vector<std::uint32_t> leaf_position;

    std::span<const std::uint32_t> members(NodeId v) const
    {
        return {leaf_order.data() + leaf_begin[v], leaf_end[v] - leaf_begin[v]};
    }
    bool contains(NodeId v, std::uint32_t point) const
    {
        return leaf_position[point] >= leaf_begin[v] && leaf_position[point] < leaf_end[v];
    }

    /// s*(v) = x_{c(r)} + s(v).
    std::vector<double> surrogate(NodeId v) const;
    /// s*_eps(v) for v in L(T).
    std::vector<double> leaf_surrogate(NodeId v) const;
};

/// Transitive merging of clusters closer than 2^level, one level at a time.
MergeTree build_hierarchy(const PointSet& ps, const DistanceMatrix& dist);

/// Replaces qualifying maximal 1-paths by long edges and lays T out in preorder.
RelativeLocationTree compress_paths(MergeTree hierarchy, const PointSet& ps, DistanceMatrix dist, double eps);

void assign_centers(RelativeLocationTree& t);

/// Requires centers. Fills ingresses and the per-node spanning-tree order.
void assign_ingresses(RelativeLocationTree& t);

/// Nodes of the subtree rooted at `root`, each strictly after its ingress.
std::vector<NodeId> ingress_order(const RelativeLocationTree& t, NodeId root);

/// Precisions, net elements and (shifted) surrogates.
void compute_surrogates(RelativeLocationTree& t);

/// Picks landmark nodes with ingress spacing `stride` and records their shifted surrogates.
void select_landmarks(RelativeLocationTree& t, unsigned stride);

/// Full deterministic pipeline: hierarchy, compression, annotations, landmarks.
RelativeLocationTree build_tree(const PointSet& ps, double eps);

} // namespace msketch
