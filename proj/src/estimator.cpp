#include "msketch/estimator.hpp"

#include "msketch/error.hpp"

#include <algorithm>
#include <cmath>

namespace msketch {

QueryContext::QueryContext(SketchTree tree, bool cache) : tree_(std::move(tree)), cached_(cache)
{
    if (tree_.subtree_root.size() != tree_.nodes.size()) {
        tree_.derive();
    }
    rd_ = tree_.root_dim();
    landmark_index_.assign(tree_.nodes.size(), -1);
    for (std::size_t k = 0; k < tree_.landmarks.size(); ++k) {
        landmark_index_[tree_.landmarks[k].node] = static_cast<std::int32_t>(k);
    }
    if (!cached_) {
        return;
    }
    const std::size_t count = tree_.nodes.size();
    const std::size_t d = tree_.header.d;
    coarse_.assign(count, {});
    fine_.assign(count, {});
    // Memoized replay along ingress links; each node resolves its chain once.
    std::vector<NodeId> chain;
    for (NodeId v = 0; v < count; ++v) {
        chain.clear();
        NodeId w = v;
        while (coarse_[w].empty()) {
            if (tree_.is_subtree_root(w)) {
                coarse_[w].assign(d, 0);
                break;
            }
            if (landmark_index_[w] >= 0) {
                coarse_[w] = tree_.landmarks[landmark_index_[w]].units;
                break;
            }
            chain.push_back(w);
            w = tree_.nodes[w].ingress;
            require(chain.size() <= count, ErrorKind::decode, "ingress links form a cycle");
        }
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
            const SketchNode& node = tree_.nodes[*it];
            const auto& base = coarse_[node.ingress];
            auto& out = coarse_[*it];
            out.resize(d);
            const std::int64_t scale = std::int64_t{1} << node.level;
            for (std::size_t j = 0; j < d; ++j) {
                out[j] = base[j] + node.eta[j] * scale;
            }
        }
    }
    for (NodeId v : tree_.subtree_leaves) {
        auto& out = fine_[v];
        if (tree_.is_subtree_root(v)) {
            out.assign(d, 0.0);
            continue;
        }
        const SketchNode& node = tree_.nodes[v];
        const auto& base = coarse_[node.ingress];
        out.resize(d);
        for (std::size_t j = 0; j < d; ++j) {
            out[j] = static_cast<double>(base[j]) + fine_increment(node.eta_eps[j], node.level, tree_.header.eps);
        }
    }
}

std::vector<std::int64_t> QueryContext::shifted_surrogate(NodeId v) const
{
    require(v < tree_.nodes.size(), ErrorKind::invalid_argument, "node out of range");
    if (cached_) {
        touch();
        return coarse_[v];
    }
    const std::size_t d = tree_.header.d;
    std::vector<NodeId> chain;
    NodeId w = v;
    std::vector<std::int64_t> out;
    while (true) {
        touch();
        if (tree_.is_subtree_root(w)) {
            out.assign(d, 0);
            break;
        }
        if (landmark_index_[w] >= 0) {
            out = tree_.landmarks[landmark_index_[w]].units;
            break;
        }
        chain.push_back(w);
        w = tree_.nodes[w].ingress;
        require(chain.size() <= tree_.nodes.size(), ErrorKind::decode, "ingress links form a cycle");
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        const SketchNode& node = tree_.nodes[*it];
        const std::int64_t scale = std::int64_t{1} << node.level;
        for (std::size_t j = 0; j < d; ++j) {
            out[j] += node.eta[j] * scale;
        }
    }
    return out;
}

std::vector<double> QueryContext::shifted_leaf_surrogate(NodeId v) const
{
    require(v < tree_.nodes.size() && tree_.is_subtree_leaf(v), ErrorKind::invalid_argument,
            "fine surrogate requested outside L(T)");
    if (cached_) {
        touch();
        return fine_[v];
    }
    const std::size_t d = tree_.header.d;
    if (tree_.is_subtree_root(v)) {
        touch();
        return std::vector<double>(d, 0.0);
    }
    touch();
    const SketchNode& node = tree_.nodes[v];
    const auto base = shifted_surrogate(node.ingress);
    std::vector<double> out(d);
    for (std::size_t j = 0; j < d; ++j) {
        out[j] = static_cast<double>(base[j]) + fine_increment(node.eta_eps[j], node.level, tree_.header.eps);
    }
    return out;
}

NodeId QueryContext::lca(NodeId a, NodeId b) const
{
    const auto& nodes = tree_.nodes;
    touch(2);
    while (a != b) {
        if (nodes[a].level <= nodes[b].level) {
            a = nodes[a].parent;
        } else {
            b = nodes[b].parent;
        }
        require(a != kNoNode && b != kNoNode, ErrorKind::internal, "nodes share no ancestor");
        touch();
    }
    return a;
}

void QueryContext::check_pair(std::uint64_t i, std::uint64_t j) const
{
    require(i < tree_.header.n && j < tree_.header.n, ErrorKind::invalid_argument, "point index out of range");
    require(i != j, ErrorKind::invalid_argument, "query needs two distinct points");
}

QueryContext::QueryPath QueryContext::query_path(std::uint64_t i, std::uint64_t j) const
{
    check_pair(i, j);
    QueryPath q;
    const NodeId li = tree_.leaf_of_point[i];
    const NodeId lj = tree_.leaf_of_point[j];
    q.meet = lca(li, lj);
    // L(T) nodes on the way up from a leaf: the leaf itself and every long-edge top.
    auto collect = [&](NodeId leaf, NodeId& top, std::vector<NodeId>& below) {
        std::vector<NodeId> stops{leaf};
        for (NodeId w = leaf; w != q.meet; w = tree_.nodes[w].parent) {
            if (tree_.nodes[w].edge == EdgeKind::long_edge && tree_.nodes[w].parent != q.meet) {
                stops.push_back(tree_.nodes[w].parent);
            }
        }
        top = stops.back();
        stops.pop_back();
        below.assign(stops.rbegin(), stops.rend());
    };
    collect(li, q.top_i, q.below_i);
    collect(lj, q.top_j, q.below_j);
    return q;
}

double QueryContext::estimate_lp(std::uint64_t i, std::uint64_t j) const
{
    const QueryPath q = query_path(i, j);
    const auto a = shifted_leaf_surrogate(q.top_i);
    const auto b = shifted_leaf_surrogate(q.top_j);
    std::vector<double> diff(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        diff[k] = a[k] - b[k];
    }
    return std::ldexp(lp_norm(diff, tree_.header.p) / rd_, static_cast<int>(tree_.header.scale_exponent));
}

std::vector<double> QueryContext::probabilistic_surrogate(NodeId path_top, const std::vector<NodeId>& below,
                                                          int copy) const
{
    require(tree_.augmentations.has_value(), ErrorKind::invalid_argument, "sketch carries no augmentations");
    require(copy == 0 || copy == 1, ErrorKind::invalid_argument, "copy must be 0 or 1");
    const Augmentations& aug = *tree_.augmentations;
    const auto base = shifted_surrogate(path_top);
    std::vector<double> x(base.begin(), base.end());
    const auto& a = aug.surrogate[path_top][copy];
    const double cell = std::ldexp(1.0, tree_.nodes[path_top].level);
    for (std::size_t k = 0; k < x.size(); ++k) {
        x[k] += static_cast<double>(a[k]) * cell;
    }
    for (NodeId w : below) {
        touch();
        const NodeId top = tree_.long_edge_top(w);
        const double side = std::ldexp(1.0, tree_.nodes[top].level);
        const auto& b = aug.long_edge[w][copy];
        for (std::size_t k = 0; k < x.size(); ++k) {
            x[k] += static_cast<double>(b[k]) * side;
        }
    }
    return x;
}

double QueryContext::inner_product(std::uint64_t i, std::uint64_t j) const
{
    require(tree_.header.kind == SketchKind::euclidean, ErrorKind::invalid_argument,
            "euclidean estimate needs a euclidean sketch");
    const QueryPath q = query_path(i, j);
    double dot = 0.0;
    const auto xi1 = probabilistic_surrogate(q.top_i, q.below_i, 0);
    const auto xj1 = probabilistic_surrogate(q.top_j, q.below_j, 0);
    const auto xi2 = probabilistic_surrogate(q.top_i, q.below_i, 1);
    const auto xj2 = probabilistic_surrogate(q.top_j, q.below_j, 1);
    for (std::size_t k = 0; k < xi1.size(); ++k) {
        dot += (xi1[k] - xj1[k]) * (xi2[k] - xj2[k]);
    }
    return dot / (rd_ * rd_);
}

double QueryContext::estimate_euclidean(std::uint64_t i, std::uint64_t j) const
{
    const double dot = inner_product(i, j);
    return std::ldexp(std::sqrt(std::max(0.0, dot)), static_cast<int>(tree_.header.scale_exponent));
}

double QueryContext::estimate(std::uint64_t i, std::uint64_t j) const
{
    return tree_.header.kind == SketchKind::euclidean ? estimate_euclidean(i, j) : estimate_lp(i, j);
}

} // namespace msketch
