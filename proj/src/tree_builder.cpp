#include "msketch/tree_builder.hpp"

#include "msketch/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <tuple>

namespace msketch {

DistanceMatrix::DistanceMatrix(const PointSet& ps) : n_(ps.n), values_(ps.n * ps.n, 0.0)
{
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i + 1; j < n_; ++j) {
            const double v = ps.distance(i, j);
            values_[i * n_ + j] = v;
            values_[j * n_ + i] = v;
        }
    }
}

double DistanceMatrix::min_distance() const
{
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i + 1; j < n_; ++j) {
            m = std::min(m, (*this)(i, j));
        }
    }
    return m;
}

double DistanceMatrix::max_distance() const
{
    double m = 0.0;
    for (double v : values_) {
        m = std::max(m, v);
    }
    return m;
}

std::size_t MergeTree::expanded_size() const
{
    std::size_t total = 0;
    for (std::uint32_t v = 0; v < nodes.size(); ++v) {
        const int top = v == root ? root_level + 1 : nodes[nodes[v].parent].level;
        total += static_cast<std::size_t>(top - nodes[v].level);
    }
    return total;
}

double MergeTree::scaled_diameter_sum() const
{
    double total = 0.0;
    for (std::uint32_t v = 0; v < nodes.size(); ++v) {
        const int top = v == root ? root_level + 1 : nodes[nodes[v].parent].level;
        for (int l = nodes[v].level; l < top; ++l) {
            total += std::ldexp(nodes[v].diameter, -l);
        }
    }
    return total;
}

namespace {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }

    std::uint32_t find(std::uint32_t x)
    {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::uint32_t a, std::uint32_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b) {
            parent_[std::max(a, b)] = std::min(a, b);
        }
    }

private:
    std::vector<std::uint32_t> parent_;
};

constexpr int kMaxLevel = 60;

} // namespace

MergeTree build_hierarchy(const PointSet& ps, const DistanceMatrix& dist)
{
    const std::size_t n = ps.n;
    require(n >= 1, ErrorKind::invalid_argument, "point set is empty");
    MergeTree tree;
    tree.nodes.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        tree.nodes[i].members = {i};
    }
    if (n == 1) {
        return tree;
    }

    struct Pair {
        double d;
        std::uint32_t i;
        std::uint32_t j;
    };
    std::vector<Pair> pairs;
    pairs.reserve(n * (n - 1) / 2);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = i + 1; j < n; ++j) {
            pairs.push_back({dist(i, j), i, j});
        }
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const Pair& a, const Pair& b) { return std::tie(a.d, a.i, a.j) < std::tie(b.d, b.i, b.j); });
    require(pairs.front().d > 0.0, ErrorKind::precondition, "duplicate points");
    require(pairs.front().d >= 1.0, ErrorKind::precondition, "pairwise distances must be at least 1");
    const double diameter = pairs.back().d;
    require(diameter < std::ldexp(1.0, kMaxLevel - 2), ErrorKind::invalid_argument, "aspect ratio too large");

    UnionFind uf(n);
    std::vector<std::uint32_t> active(n); // merge node ids of the current clusters
    std::iota(active.begin(), active.end(), 0u);
    std::size_t next_pair = 0;
    int level = 0;
    while (active.size() > 1) {
        ++level;
        const double threshold = std::ldexp(1.0, level);
        while (next_pair < pairs.size() && pairs[next_pair].d < threshold) {
            uf.unite(pairs[next_pair].i, pairs[next_pair].j);
            ++next_pair;
        }
        std::map<std::uint32_t, std::vector<std::uint32_t>> groups;
        for (std::uint32_t c : active) {
            groups[uf.find(tree.nodes[c].members.front())].push_back(c);
        }
        std::vector<std::uint32_t> next_active;
        next_active.reserve(groups.size());
        for (auto& [rep, children] : groups) {
            if (children.size() == 1) {
                next_active.push_back(children.front());
                continue;
            }
            std::sort(children.begin(), children.end(), [&](std::uint32_t a, std::uint32_t b) {
                return tree.nodes[a].members.front() < tree.nodes[b].members.front();
            });
            MergeNode node;
            node.level = level;
            node.children = children;
            double diam = 0.0;
            for (std::size_t a = 0; a < children.size(); ++a) {
                const MergeNode& ca = tree.nodes[children[a]];
                diam = std::max(diam, ca.diameter);
                for (std::size_t b = a + 1; b < children.size(); ++b) {
                    for (std::uint32_t x : ca.members) {
                        for (std::uint32_t y : tree.nodes[children[b]].members) {
                            diam = std::max(diam, dist(x, y));
                        }
                    }
                }
                node.members.insert(node.members.end(), ca.members.begin(), ca.members.end());
            }
            std::sort(node.members.begin(), node.members.end());
            node.diameter = diam;
            const auto id = static_cast<std::uint32_t>(tree.nodes.size());
            for (std::uint32_t c : children) {
                tree.nodes[c].parent = id;
            }
            tree.nodes.push_back(std::move(node));
            next_active.push_back(id);
        }
        active = std::move(next_active);
    }
    tree.root = active.front();
    int root_level = tree.nodes[tree.root].level;
    while (std::ldexp(1.0, root_level) < diameter) {
        ++root_level;
    }
    tree.root_level = root_level;
    return tree;
}

RelativeLocationTree compress_paths(MergeTree hierarchy, const PointSet& ps, DistanceMatrix dist, double eps)
{
    RelativeLocationTree t;
    t.eps_requested = eps;
    SketchHeader& header = t.sketch.header;
    header.n = ps.n;
    header.d = ps.d;
    header.p = ps.p;
    header.eps = Dyadic::from_below(eps);
    header.scale_exponent = ps.scale_exponent;
    header.phi_exponent = static_cast<std::uint64_t>(hierarchy.root_level);
    header.kind = SketchKind::lp;
    const double eps_used = header.eps.value();

    auto& nodes = t.sketch.nodes;
    auto new_node = [&](std::uint32_t cluster, int level, NodeId parent, EdgeKind edge, std::uint32_t k) {
        const auto id = static_cast<NodeId>(nodes.size());
        SketchNode node;
        node.parent = parent;
        node.level = level;
        node.edge = parent == kNoNode ? EdgeKind::none : edge;
        node.long_length = k;
        nodes.push_back(std::move(node));
        t.diameter.push_back(hierarchy.nodes[cluster].diameter);
        t.leaf_begin.push_back(static_cast<std::uint32_t>(t.leaf_order.size()));
        if (parent != kNoNode) {
            nodes[parent].children.push_back(id);
        }
        return id;
    };

    // A 1-path of length k >= 2 above a cluster of diameter diam becomes a
    // long edge when its top node already satisfies diam <= 2^{level} * eps.
    auto compresses = [&](int top_level, int k, double diam) {
        return k >= 2 && (diam == 0.0 || std::ldexp(eps_used, top_level) >= diam);
    };

    auto expand = [&](auto&& self, std::uint32_t cluster, NodeId id) -> void {
        const MergeNode& m = hierarchy.nodes[cluster];
        if (m.children.empty()) {
            t.leaf_order.push_back(m.members.front());
            return;
        }
        for (std::uint32_t child : m.children) {
            const int a = hierarchy.nodes[child].level;
            const int k = m.level - a;
            if (k == 1) {
                self(self, child, new_node(child, a, id, EdgeKind::short_edge, 0));
            } else if (compresses(m.level - 1, k, hierarchy.nodes[child].diameter)) {
                const NodeId top = new_node(child, m.level - 1, id, EdgeKind::short_edge, 0);
                self(self, child, new_node(child, a, top, EdgeKind::long_edge, static_cast<std::uint32_t>(k)));
            } else {
                NodeId prev = id;
                for (int l = m.level - 1; l > a; --l) {
                    prev = new_node(child, l, prev, EdgeKind::short_edge, 0);
                }
                self(self, child, new_node(child, a, prev, EdgeKind::short_edge, 0));
            }
        }
    };

    const std::uint32_t root = hierarchy.root;
    NodeId prev = kNoNode;
    for (int l = hierarchy.root_level; l > hierarchy.nodes[root].level; --l) {
        prev = new_node(root, l, prev, EdgeKind::short_edge, 0);
    }
    expand(expand, root, new_node(root, hierarchy.nodes[root].level, prev, EdgeKind::short_edge, 0));

    const std::size_t count = nodes.size();
    t.leaf_end.assign(count, 0);
    for (NodeId v = static_cast<NodeId>(count); v-- > 0;) {
        t.leaf_end[v] = nodes[v].children.empty() ? t.leaf_begin[v] + 1 : t.leaf_end[nodes[v].children.back()];
    }
    t.leaf_position.assign(ps.n, 0);
    for (std::uint32_t pos = 0; pos < t.leaf_order.size(); ++pos) {
        t.leaf_position[t.leaf_order[pos]] = pos;
    }
    t.tau_order.assign(count, {});
    t.points = ps;
    t.hierarchy = std::move(hierarchy);
    t.distances = std::move(dist);
    return t;
}

void assign_centers(RelativeLocationTree& t)
{
    auto& nodes = t.sketch.nodes;
    for (NodeId v = static_cast<NodeId>(nodes.size()); v-- > 0;) {
        if (nodes[v].children.empty()) {
            nodes[v].center = t.leaf_order[t.leaf_begin[v]];
        } else {
            std::uint32_t c = UINT32_MAX;
            for (NodeId u : nodes[v].children) {
                c = std::min(c, nodes[u].center);
            }
            nodes[v].center = c;
        }
    }
    t.sketch.derive();
}

namespace {

// Lowest node of the subtree containing `from` whose cluster holds `point`.
NodeId descend_to_subtree_leaf(const RelativeLocationTree& t, NodeId from, std::uint32_t point)
{
    const auto& nodes = t.sketch.nodes;
    NodeId w = from;
    while (!t.sketch.is_subtree_leaf(w)) {
        NodeId next = kNoNode;
        for (NodeId c : nodes[w].children) {
            if (t.contains(c, point)) {
                next = c;
                break;
            }
        }
        require(next != kNoNode, ErrorKind::internal, "point not found below ingress candidate");
        w = next;
    }
    return w;
}

} // namespace

void assign_ingresses(RelativeLocationTree& t)
{
    auto& nodes = t.sketch.nodes;
    const DistanceMatrix& dist = t.distances;
    for (NodeId v = 0; v < nodes.size(); ++v) {
        if (t.sketch.is_subtree_root(v)) {
            nodes[v].ingress = v;
        }
        const auto& ch = nodes[v].children;
        if (ch.empty() || nodes[ch.front()].edge == EdgeKind::long_edge) {
            continue;
        }
        require(nodes[ch.front()].center == nodes[v].center, ErrorKind::internal, "first child must hold the center");
        nodes[ch.front()].ingress = v;
        const std::size_t k = ch.size();
        if (k == 1) {
            t.tau_order[v] = {ch.front()};
            continue;
        }

        // Cluster distances between children; graph H_v joins those within 2^{level(v)}.
        std::vector<double> cd(k * k, std::numeric_limits<double>::infinity());
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = a + 1; b < k; ++b) {
                double m = std::numeric_limits<double>::infinity();
                for (std::uint32_t x : t.members(ch[a])) {
                    for (std::uint32_t y : t.members(ch[b])) {
                        m = std::min(m, dist(x, y));
                    }
                }
                cd[a * k + b] = cd[b * k + a] = m;
            }
        }
        const double radius = std::ldexp(1.0, nodes[v].level);
        std::vector<std::size_t> tau_parent(k, k);
        std::vector<std::vector<std::size_t>> tau_children(k);
        std::vector<bool> seen(k, false);
        std::queue<std::size_t> queue;
        queue.push(0);
        seen[0] = true;
        while (!queue.empty()) {
            const std::size_t a = queue.front();
            queue.pop();
            for (std::size_t b = 0; b < k; ++b) {
                if (!seen[b] && cd[a * k + b] <= radius) {
                    seen[b] = true;
                    tau_parent[b] = a;
                    tau_children[a].push_back(b);
                    queue.push(b);
                }
            }
        }
        require(std::all_of(seen.begin(), seen.end(), [](bool s) { return s; }), ErrorKind::internal,
                "children graph is disconnected");

        for (std::size_t b = 1; b < k; ++b) {
            const NodeId from = ch[tau_parent[b]];
            std::uint32_t best_point = UINT32_MAX;
            double best = std::numeric_limits<double>::infinity();
            for (std::uint32_t x : t.members(from)) {
                double m = std::numeric_limits<double>::infinity();
                for (std::uint32_t y : t.members(ch[b])) {
                    m = std::min(m, dist(x, y));
                }
                if (m < best || (m == best && x < best_point)) {
                    best = m;
                    best_point = x;
                }
            }
            nodes[ch[b]].ingress = descend_to_subtree_leaf(t, from, best_point);
        }

        std::vector<NodeId> order;
        std::vector<std::size_t> stack{0};
        while (!stack.empty()) {
            const std::size_t a = stack.back();
            stack.pop_back();
            order.push_back(ch[a]);
            for (auto it = tau_children[a].rbegin(); it != tau_children[a].rend(); ++it) {
                stack.push_back(*it);
            }
        }
        t.tau_order[v] = std::move(order);
    }
}

std::vector<NodeId> ingress_order(const RelativeLocationTree& t, NodeId root)
{
    require(t.sketch.is_subtree_root(root), ErrorKind::invalid_argument, "ingress_order expects a subtree root");
    std::vector<NodeId> order;
    std::vector<NodeId> stack{root};
    while (!stack.empty()) {
        const NodeId v = stack.back();
        stack.pop_back();
        order.push_back(v);
        const auto& next = t.tau_order[v];
        for (auto it = next.rbegin(); it != next.rend(); ++it) {
            stack.push_back(*it);
        }
    }
    std::vector<std::uint8_t> placed(t.sketch.nodes.size(), 0);
    for (NodeId v : order) {
        if (v != root) {
            require(placed[t.sketch.nodes[v].ingress] != 0, ErrorKind::internal, "ingress order has a cycle");
        }
        placed[v] = 1;
    }
    return order;
}

std::vector<double> RelativeLocationTree::surrogate(NodeId v) const
{
    const NodeId r = sketch.subtree_root[v];
    const auto origin = points.row(sketch.nodes[r].center);
    const double rd = sketch.root_dim();
    std::vector<double> out(points.d);
    for (std::size_t j = 0; j < points.d; ++j) {
        out[j] = origin[j] + static_cast<double>(surrogate_units[v][j]) / rd;
    }
    return out;
}

std::vector<double> RelativeLocationTree::leaf_surrogate(NodeId v) const
{
    require(sketch.is_subtree_leaf(v), ErrorKind::invalid_argument, "leaf surrogate of a node outside L(T)");
    const NodeId r = sketch.subtree_root[v];
    const auto origin = points.row(sketch.nodes[r].center);
    const double rd = sketch.root_dim();
    std::vector<double> out(points.d);
    for (std::size_t j = 0; j < points.d; ++j) {
        out[j] = origin[j] + leaf_surrogate_units[v][j] / rd;
    }
    return out;
}

// Slack on ||eta*|| <= 1; the bound is exact in real arithmetic.
constexpr double kEtaNormSlack = 1e-9;

void compute_surrogates(RelativeLocationTree& t)
{
    auto& nodes = t.sketch.nodes;
    const std::size_t d = t.points.d;
    const NormOrder p = t.points.p;
    const double rd = t.sketch.root_dim();
    const Dyadic eps = t.sketch.header.eps;
    const double eps_value = eps.value();
    t.surrogate_units.assign(nodes.size(), {});
    t.leaf_surrogate_units.assign(nodes.size(), {});

    std::vector<double> eta_star(d);
    for (NodeId r = 0; r < nodes.size(); ++r) {
        if (!t.sketch.is_subtree_root(r)) {
            continue;
        }
        const auto origin = t.points.row(nodes[r].center);
        for (NodeId v : ingress_order(t, r)) {
            SketchNode& node = nodes[v];
            if (v == r) {
                node.gamma_inv = 0;
                node.eta.clear();
                node.eta_eps.clear();
                t.surrogate_units[v].assign(d, 0);
                if (t.sketch.is_subtree_leaf(v)) {
                    t.leaf_surrogate_units[v].assign(d, 0.0);
                }
                continue;
            }
            const int level = node.level;
            node.gamma_inv = 5 + static_cast<std::uint64_t>(std::ceil(std::ldexp(t.diameter[v], -level)));
            const double gamma = 1.0 / static_cast<double>(node.gamma_inv);
            const auto& base = t.surrogate_units[node.ingress];
            const auto center = t.points.row(node.center);
            for (std::size_t j = 0; j < d; ++j) {
                const double anchor = origin[j] + static_cast<double>(base[j]) / rd;
                eta_star[j] = std::ldexp((center[j] - anchor) * gamma, -level);
            }
            require(lp_norm(eta_star, p) <= 1.0 + kEtaNormSlack, ErrorKind::internal,
                    "displacement exceeds the unit ball; ingress or level bound violated");

            node.eta.assign(d, 0);
            floor_to_grid(eta_star, gamma / rd, node.eta);
            auto& units = t.surrogate_units[v];
            units.resize(d);
            const std::int64_t scale = std::int64_t{1} << level;
            for (std::size_t j = 0; j < d; ++j) {
                require(std::abs(node.eta[j]) < (std::int64_t{1} << (62 - level)), ErrorKind::internal,
                        "surrogate coordinate overflow");
                units[j] = base[j] + node.eta[j] * scale;
            }

            if (t.sketch.is_subtree_leaf(v)) {
                node.eta_eps.assign(d, 0);
                floor_to_grid(eta_star, gamma * eps_value / rd, node.eta_eps);
                auto& fine = t.leaf_surrogate_units[v];
                fine.resize(d);
                for (std::size_t j = 0; j < d; ++j) {
                    fine[j] = static_cast<double>(base[j]) + fine_increment(node.eta_eps[j], level, eps);
                }
            } else {
                node.eta_eps.clear();
            }
        }
    }
}

void select_landmarks(RelativeLocationTree& t, unsigned stride)
{
    require(stride >= 1, ErrorKind::invalid_argument, "landmark stride must be positive");
    const auto& nodes = t.sketch.nodes;
    t.landmark_nodes.clear();
    std::vector<std::uint32_t> depth(nodes.size(), 0);
    std::vector<std::vector<NodeId>> in_children(nodes.size());
    std::vector<std::uint8_t> removed(nodes.size(), 0);
    for (NodeId r = 0; r < nodes.size(); ++r) {
        if (!t.sketch.is_subtree_root(r)) {
            continue;
        }
        const std::vector<NodeId> order = ingress_order(t, r);
        for (NodeId v : order) {
            if (v != r) {
                depth[v] = depth[nodes[v].ingress] + 1;
                in_children[nodes[v].ingress].push_back(v);
            }
        }
        std::vector<NodeId> by_depth = order;
        std::stable_sort(by_depth.begin(), by_depth.end(),
                         [&](NodeId a, NodeId b) { return depth[a] > depth[b]; });
        for (NodeId v : by_depth) {
            if (removed[v]) {
                continue;
            }
            NodeId top = v;
            for (unsigned step = 0; step < stride && top != r; ++step) {
                top = nodes[top].ingress;
            }
            t.landmark_nodes.push_back(top);
            std::vector<NodeId> stack{top};
            while (!stack.empty()) {
                const NodeId w = stack.back();
                stack.pop_back();
                removed[w] = 1;
                for (NodeId c : in_children[w]) {
                    if (!removed[c]) {
                        stack.push_back(c);
                    }
                }
            }
        }
    }
    std::sort(t.landmark_nodes.begin(), t.landmark_nodes.end());
    t.sketch.landmarks.clear();
    for (NodeId v : t.landmark_nodes) {
        if (!t.sketch.is_subtree_root(v)) {
            t.sketch.landmarks.push_back(Landmark{v, t.surrogate_units[v]});
        }
    }
}

RelativeLocationTree build_tree(const PointSet& ps, double eps)
{
    DistanceMatrix dist(ps);
    MergeTree hierarchy = build_hierarchy(ps, dist);
    RelativeLocationTree t = compress_paths(std::move(hierarchy), ps, std::move(dist), eps);
    assign_centers(t);
    assign_ingresses(t);
    compute_surrogates(t);
    select_landmarks(t, t.sketch.landmark_stride());
    return t;
}

} // namespace msketch
