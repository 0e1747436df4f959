#include "msketch/sketch_tree.hpp"

#include "msketch/error.hpp"

#include <bit>
#include <cmath>

namespace msketch {

double Dyadic::value() const { return std::ldexp(static_cast<double>(numerator), -static_cast<int>(exponent)); }

Dyadic Dyadic::from_below(double eps)
{
    require(eps > 0.0 && eps < 1.0, ErrorKind::invalid_argument, "eps must lie in (0, 1)");
    constexpr std::uint32_t kBits = 31;
    std::uint64_t num = static_cast<std::uint64_t>(std::floor(std::ldexp(eps, kBits)));
    require(num > 0, ErrorKind::invalid_argument, "eps too small to represent");
    std::uint32_t exp = kBits;
    const unsigned tz = static_cast<unsigned>(std::countr_zero(num));
    num >>= tz;
    exp -= tz;
    return Dyadic{static_cast<std::uint32_t>(num), exp};
}

void SketchTree::derive()
{
    const std::size_t count = nodes.size();
    subtree_root.assign(count, kNoNode);
    subtree_leaf.assign(count, 0);
    leaf_of_point.assign(header.n, kNoNode);
    subtree_leaves.clear();
    for (NodeId v = 0; v < count; ++v) {
        const SketchNode& node = nodes[v];
        if (node.parent == kNoNode || node.edge == EdgeKind::long_edge) {
            subtree_root[v] = v;
        } else {
            subtree_root[v] = subtree_root[node.parent];
        }
        if (node.children.empty()) {
            require(node.center < header.n, ErrorKind::decode, "leaf center out of range");
            leaf_of_point[node.center] = v;
            subtree_leaf[v] = 1;
        } else if (node.children.size() == 1 && nodes[node.children.front()].edge == EdgeKind::long_edge) {
            subtree_leaf[v] = 1;
        }
        if (subtree_leaf[v]) {
            subtree_leaves.push_back(v);
        }
    }
}

NodeId SketchTree::long_edge_top(NodeId v) const
{
    const NodeId r = subtree_root[v];
    return nodes[r].parent;
}

unsigned SketchTree::landmark_stride() const
{
    const double rd = root_dim();
    return static_cast<unsigned>(header.phi_exponent) + 1u + static_cast<unsigned>(std::ceil(std::log2(rd)));
}

double fine_increment(std::int64_t g, int level, Dyadic eps)
{
    return std::ldexp(static_cast<double>(g) * static_cast<double>(eps.numerator),
                      level - static_cast<int>(eps.exponent));
}

} // namespace msketch
