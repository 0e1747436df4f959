#include "msketch/codec.hpp"

#include "msketch/bit_stream.hpp"
#include "msketch/error.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace msketch {

namespace {

constexpr std::size_t kSectionCount = 9;
constexpr std::size_t kFixedHeaderBytes = 4 + 1 + 8 + 8 + 8 + 4 + 4 + 8 + 8 + 1;

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, unsigned bytes)
{
    for (unsigned i = 0; i < bytes; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

class ByteCursor {
public:
    explicit ByteCursor(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::uint64_t get_le(unsigned count)
    {
        if (pos_ + count > bytes_.size()) {
            fail(ErrorKind::decode, "truncated sketch");
        }
        std::uint64_t v = 0;
        for (unsigned i = 0; i < count; ++i) {
            v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        }
        pos_ += count;
        return v;
    }

    std::span<const std::uint8_t> take(std::size_t count)
    {
        if (pos_ + count > bytes_.size()) {
            fail(ErrorKind::decode, "truncated sketch");
        }
        std::span<const std::uint8_t> s(bytes_.data() + pos_, count);
        pos_ += count;
        return s;
    }

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

SketchHeader read_header(ByteCursor& in)
{
    const auto magic = in.take(4);
    if (std::memcmp(magic.data(), kSketchMagic.data(), 4) != 0) {
        fail(ErrorKind::decode, "bad sketch magic");
    }
    if (in.get_le(1) != kSketchVersion) {
        fail(ErrorKind::decode, "unsupported sketch version");
    }
    SketchHeader h;
    h.n = in.get_le(8);
    h.d = in.get_le(8);
    const std::uint64_t p = in.get_le(8);
    if (p > 64) {
        fail(ErrorKind::decode, "bad norm order");
    }
    h.p = NormOrder::from_code(p);
    h.eps.numerator = static_cast<std::uint32_t>(in.get_le(4));
    h.eps.exponent = static_cast<std::uint32_t>(in.get_le(4));
    h.scale_exponent = static_cast<std::int64_t>(in.get_le(8));
    h.phi_exponent = in.get_le(8);
    const std::uint64_t flags = in.get_le(1);
    if (flags > 1) {
        fail(ErrorKind::decode, "bad sketch flags");
    }
    h.kind = static_cast<SketchKind>(flags);
    if (h.n == 0 || h.d == 0 || h.eps.numerator == 0 || h.eps.exponent > 62 || h.phi_exponent > 62) {
        fail(ErrorKind::decode, "invalid sketch header");
    }
    return h;
}

std::vector<std::uint32_t> subtree_leaf_index(const SketchTree& t)
{
    std::vector<std::uint32_t> index(t.nodes.size(), UINT32_MAX);
    for (std::uint32_t i = 0; i < t.subtree_leaves.size(); ++i) {
        index[t.subtree_leaves[i]] = i;
    }
    return index;
}

void put_signed_vector(BitWriter& w, const std::vector<std::int64_t>& values, std::int64_t bound, const char* what)
{
    for (std::int64_t v : values) {
        if (bound > 0 && (v > bound || v < -bound)) {
            fail(ErrorKind::internal, what);
        }
        w.put_signed_gamma(v);
    }
}

std::vector<std::int64_t> get_signed_vector(BitReader& r, std::size_t d)
{
    std::vector<std::int64_t> out(d);
    for (auto& v : out) {
        v = r.get_signed_gamma();
    }
    return out;
}

} // namespace

std::uint64_t SketchBits::bit_length() const { return size_report(*this).total(); }

SketchBits SketchBits::load(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::input, "cannot open sketch file: " + path);
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return SketchBits(std::move(bytes));
}

void SketchBits::save(const std::string& path) const
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorKind::input, "cannot write sketch file: " + path);
    }
    out.write(reinterpret_cast<const char*>(bytes_.data()), static_cast<std::streamsize>(bytes_.size()));
}

SketchBits encode(const SketchTree& tree)
{
    const SketchHeader& h = tree.header;
    const auto& nodes = tree.nodes;
    const std::size_t d = h.d;
    require(!nodes.empty(), ErrorKind::invalid_argument, "encode: empty tree");
    require(tree.subtree_root.size() == nodes.size(), ErrorKind::invalid_argument, "encode: derived fields missing");
    require((h.kind == SketchKind::euclidean) == tree.augmentations.has_value(), ErrorKind::invalid_argument,
            "encode: augmentations present iff the sketch is euclidean");

    std::array<BitWriter, kSectionCount> sec;
    BitWriter& topology = sec[0];
    BitWriter& long_edges = sec[1];
    BitWriter& centers = sec[2];
    BitWriter& ingresses = sec[3];
    BitWriter& gammas = sec[4];
    BitWriter& etas = sec[5];
    BitWriter& leaf_etas = sec[6];
    BitWriter& landmarks = sec[7];
    BitWriter& augmentations = sec[8];

    // Balanced parentheses: nodes are stored in preorder, so an open bit per
    // node followed by close bits for every subtree finished before the next.
    std::vector<NodeId> open;
    for (NodeId v = 0; v < nodes.size(); ++v) {
        while (!open.empty() && open.back() != nodes[v].parent) {
            topology.put_bit(false);
            open.pop_back();
        }
        require(v == 0 || !open.empty(), ErrorKind::invalid_argument, "encode: nodes not in preorder");
        topology.put_bit(true);
        open.push_back(v);
    }
    while (!open.empty()) {
        topology.put_bit(false);
        open.pop_back();
    }

    const unsigned center_width = index_width(h.n);
    const auto leaf_index = subtree_leaf_index(tree);
    const unsigned leaf_width = index_width(tree.subtree_leaves.size());
    const double rd = tree.root_dim();
    const double eps = h.eps.value();
    for (NodeId v = 0; v < nodes.size(); ++v) {
        const SketchNode& node = nodes[v];
        if (v != 0) {
            const bool is_long = node.edge == EdgeKind::long_edge;
            long_edges.put_bit(is_long);
            if (is_long) {
                require(node.long_length >= 2, ErrorKind::invalid_argument, "encode: long edge shorter than 2");
                long_edges.put_gamma(node.long_length);
            }
        }
        centers.put_bits(node.center, center_width);

        if (node.ingress == v) {
            ingresses.put_bits(0, 2);
        } else if (node.ingress == node.parent) {
            ingresses.put_bits(1, 2);
        } else {
            require(node.ingress < nodes.size() && leaf_index[node.ingress] != UINT32_MAX,
                    ErrorKind::invalid_argument, "encode: ingress is not self, parent, or a subtree leaf");
            ingresses.put_bits(2, 2);
            ingresses.put_bits(leaf_index[node.ingress], leaf_width);
        }

        if (tree.is_subtree_root(v)) {
            continue;
        }
        require(node.gamma_inv >= 5 && node.eta.size() == d, ErrorKind::invalid_argument,
                "encode: missing precision or net element");
        gammas.put_gamma(node.gamma_inv);
        const double gamma = 1.0 / static_cast<double>(node.gamma_inv);
        put_signed_vector(etas, node.eta, net_coord_bound(d, h.p, gamma), "encode: net coordinate out of range");
        if (tree.is_subtree_leaf(v)) {
            require(node.eta_eps.size() == d, ErrorKind::invalid_argument, "encode: missing fine net element");
            const auto bound = static_cast<std::int64_t>(std::ceil(2.0 * rd / (gamma * eps)));
            put_signed_vector(leaf_etas, node.eta_eps, bound, "encode: fine net coordinate out of range");
        }
    }

    const unsigned stride = tree.landmark_stride();
    require(stride < 62, ErrorKind::invalid_argument, "encode: landmark stride too large");
    const unsigned node_width = index_width(nodes.size());
    landmarks.put_gamma(tree.landmarks.size() + 1);
    for (const Landmark& lm : tree.landmarks) {
        require(lm.node < nodes.size() && lm.units.size() == d, ErrorKind::invalid_argument, "encode: bad landmark");
        landmarks.put_bits(lm.node, node_width);
        for (std::int64_t u : lm.units) {
            const std::uint64_t mag = static_cast<std::uint64_t>(u < 0 ? -u : u);
            require(mag < (std::uint64_t{1} << stride), ErrorKind::internal,
                    "encode: shifted surrogate exceeds the landmark range");
            landmarks.put_bit(u < 0);
            landmarks.put_bits(mag, stride);
        }
    }

    if (tree.augmentations) {
        const Augmentations& aug = *tree.augmentations;
        require(aug.surrogate.size() == nodes.size() && aug.long_edge.size() == nodes.size(),
                ErrorKind::invalid_argument, "encode: augmentation table size mismatch");
        for (NodeId v : tree.subtree_leaves) {
            for (const auto& copy : aug.surrogate[v]) {
                require(copy.size() == d, ErrorKind::invalid_argument, "encode: missing surrogate corner");
                put_signed_vector(augmentations, copy, 0, "");
            }
            const bool has_long = tree.long_edge_top(v) != kNoNode;
            for (const auto& copy : aug.long_edge[v]) {
                require(has_long ? copy.size() == d : copy.empty(), ErrorKind::invalid_argument,
                        "encode: long-edge corner present iff the subtree hangs off a long edge");
                if (has_long) {
                    put_signed_vector(augmentations, copy, 0, "");
                }
            }
        }
    }

    std::vector<std::uint8_t> out;
    out.insert(out.end(), kSketchMagic.begin(), kSketchMagic.end());
    put_le(out, kSketchVersion, 1);
    put_le(out, h.n, 8);
    put_le(out, h.d, 8);
    put_le(out, h.p.code(), 8);
    put_le(out, h.eps.numerator, 4);
    put_le(out, h.eps.exponent, 4);
    put_le(out, static_cast<std::uint64_t>(h.scale_exponent), 8);
    put_le(out, h.phi_exponent, 8);
    put_le(out, static_cast<std::uint64_t>(h.kind), 1);
    for (const BitWriter& w : sec) {
        put_le(out, w.bit_length(), 8);
        out.insert(out.end(), w.bytes().begin(), w.bytes().end());
    }
    return SketchBits(std::move(out));
}

namespace {

struct Sections {
    SketchHeader header;
    std::array<std::span<const std::uint8_t>, kSectionCount> payload;
    std::array<std::uint64_t, kSectionCount> bits{};
};

Sections split(const SketchBits& bits)
{
    ByteCursor in(bits.bytes());
    Sections s;
    s.header = read_header(in);
    for (std::size_t i = 0; i < kSectionCount; ++i) {
        s.bits[i] = in.get_le(8);
        if (s.bits[i] > in.remaining() * 8) {
            fail(ErrorKind::decode, "truncated sketch section");
        }
        s.payload[i] = in.take((s.bits[i] + 7) / 8);
    }
    if (in.remaining() != 0) {
        fail(ErrorKind::decode, "trailing bytes after sketch");
    }
    return s;
}

} // namespace

SizeReport size_report(const SketchBits& bits)
{
    const Sections s = split(bits);
    SizeReport r;
    r.header = kFixedHeaderBytes * 8 + kSectionCount * 64;
    r.topology = s.bits[0];
    r.long_edges = s.bits[1];
    r.centers = s.bits[2];
    r.ingresses = s.bits[3];
    r.gammas = s.bits[4];
    r.etas = s.bits[5];
    r.leaf_etas = s.bits[6];
    r.landmarks = s.bits[7];
    r.augmentations = s.bits[8];
    return r;
}

SketchTree decode(const SketchBits& bits)
{
    const Sections s = split(bits);
    SketchTree t;
    t.header = s.header;
    const SketchHeader& h = t.header;
    const std::size_t d = h.d;
    auto reader = [&](std::size_t i) { return BitReader(s.payload[i], s.bits[i]); };
    auto finish = [](const BitReader& r, const char* what) {
        if (!r.at_end()) {
            fail(ErrorKind::decode, what);
        }
    };

    BitReader topology = reader(0);
    if (s.bits[0] % 2 != 0 || s.bits[0] == 0) {
        fail(ErrorKind::decode, "parenthesis imbalance");
    }
    std::vector<NodeId> open;
    auto& nodes = t.nodes;
    nodes.reserve(s.bits[0] / 2);
    bool closed_root = false;
    while (!topology.at_end()) {
        if (topology.get_bit()) {
            if (closed_root) {
                fail(ErrorKind::decode, "parenthesis imbalance");
            }
            SketchNode node;
            node.parent = open.empty() ? kNoNode : open.back();
            const auto id = static_cast<NodeId>(nodes.size());
            if (node.parent != kNoNode) {
                nodes[node.parent].children.push_back(id);
            }
            nodes.push_back(std::move(node));
            open.push_back(id);
        } else {
            if (open.empty()) {
                fail(ErrorKind::decode, "parenthesis imbalance");
            }
            open.pop_back();
            closed_root = open.empty();
        }
    }
    if (!open.empty() || !closed_root) {
        fail(ErrorKind::decode, "parenthesis imbalance");
    }

    BitReader long_edges = reader(1);
    nodes[0].level = static_cast<int>(h.phi_exponent);
    for (NodeId v = 1; v < nodes.size(); ++v) {
        SketchNode& node = nodes[v];
        const int top = nodes[node.parent].level;
        if (long_edges.get_bit()) {
            const std::uint64_t k = long_edges.get_gamma();
            if (k < 2 || k > static_cast<std::uint64_t>(top) + 1) {
                fail(ErrorKind::decode, "bad long edge length");
            }
            node.edge = EdgeKind::long_edge;
            node.long_length = static_cast<std::uint32_t>(k);
            node.level = top - static_cast<int>(k - 1);
        } else {
            node.edge = EdgeKind::short_edge;
            node.level = top - 1;
        }
        if (node.level < 0) {
            fail(ErrorKind::decode, "negative level");
        }
    }
    finish(long_edges, "long edge section length mismatch");

    BitReader centers = reader(2);
    const unsigned center_width = index_width(h.n);
    for (auto& node : nodes) {
        node.center = static_cast<std::uint32_t>(centers.get_bits(center_width));
        if (node.center >= h.n) {
            fail(ErrorKind::decode, "center out of range");
        }
    }
    finish(centers, "center section length mismatch");
    t.derive();
    for (NodeId v : t.leaf_of_point) {
        if (v == kNoNode) {
            fail(ErrorKind::decode, "point without a leaf");
        }
    }

    BitReader ingresses = reader(3);
    const unsigned leaf_width = index_width(t.subtree_leaves.size());
    for (NodeId v = 0; v < nodes.size(); ++v) {
        switch (ingresses.get_bits(2)) {
        case 0:
            nodes[v].ingress = v;
            break;
        case 1:
            if (v == 0) {
                fail(ErrorKind::decode, "root ingress cannot be its parent");
            }
            nodes[v].ingress = nodes[v].parent;
            break;
        case 2: {
            const std::uint64_t idx = ingresses.get_bits(leaf_width);
            if (idx >= t.subtree_leaves.size()) {
                fail(ErrorKind::decode, "ingress index out of range");
            }
            nodes[v].ingress = t.subtree_leaves[idx];
            break;
        }
        default:
            fail(ErrorKind::decode, "bad ingress tag");
        }
    }
    finish(ingresses, "ingress section length mismatch");

    BitReader gammas = reader(4);
    BitReader etas = reader(5);
    BitReader leaf_etas = reader(6);
    for (NodeId v = 0; v < nodes.size(); ++v) {
        if (t.is_subtree_root(v)) {
            continue;
        }
        nodes[v].gamma_inv = gammas.get_gamma();
        if (nodes[v].gamma_inv < 5) {
            fail(ErrorKind::decode, "bad precision code");
        }
        nodes[v].eta = get_signed_vector(etas, d);
        if (t.is_subtree_leaf(v)) {
            nodes[v].eta_eps = get_signed_vector(leaf_etas, d);
        }
    }
    finish(gammas, "precision section length mismatch");
    finish(etas, "net section length mismatch");
    finish(leaf_etas, "fine net section length mismatch");

    BitReader landmarks = reader(7);
    const std::uint64_t count = landmarks.get_gamma() - 1;
    const unsigned node_width = index_width(nodes.size());
    const unsigned stride = t.landmark_stride();
    for (std::uint64_t i = 0; i < count; ++i) {
        Landmark lm;
        lm.node = static_cast<NodeId>(landmarks.get_bits(node_width));
        if (lm.node >= nodes.size()) {
            fail(ErrorKind::decode, "landmark node out of range");
        }
        lm.units.resize(d);
        for (auto& u : lm.units) {
            const bool negative = landmarks.get_bit();
            const auto mag = static_cast<std::int64_t>(landmarks.get_bits(stride));
            u = negative ? -mag : mag;
        }
        t.landmarks.push_back(std::move(lm));
    }
    finish(landmarks, "landmark section length mismatch");

    BitReader augmentations = reader(8);
    if (h.kind == SketchKind::euclidean) {
        Augmentations aug;
        aug.surrogate.resize(nodes.size());
        aug.long_edge.resize(nodes.size());
        for (NodeId v : t.subtree_leaves) {
            for (auto& copy : aug.surrogate[v]) {
                copy = get_signed_vector(augmentations, d);
            }
            if (t.long_edge_top(v) != kNoNode) {
                for (auto& copy : aug.long_edge[v]) {
                    copy = get_signed_vector(augmentations, d);
                }
            }
        }
        t.augmentations = std::move(aug);
    }
    finish(augmentations, "augmentation section length mismatch");
    return t;
}

} // namespace msketch
