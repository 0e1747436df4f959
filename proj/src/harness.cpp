#include "msketch/harness.hpp"

#include "msketch/error.hpp"
#include "msketch/estimator.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace msketch {

InputFormat parse_format(const std::string& name)
{
    if (name == "text") {
        return InputFormat::text;
    }
    if (name == "binary") {
        return InputFormat::binary;
    }
    if (name == "metric") {
        return InputFormat::metric;
    }
    fail(ErrorKind::input, "unknown input format: " + name);
}

namespace {

std::ifstream open_input(const std::string& path, std::ios::openmode mode = std::ios::in)
{
    std::ifstream in(path, mode);
    if (!in) {
        fail(ErrorKind::input, "cannot open " + path);
    }
    return in;
}

std::ofstream open_output(const std::string& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        fail(ErrorKind::input, "cannot write " + path);
    }
    out.precision(17);
    return out;
}

double parse_number(const std::string& token, const std::string& where)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(token, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != token.size()) {
        fail(ErrorKind::input, where + ": cannot parse '" + token + "'");
    }
    return v;
}

} // namespace

PointSet read_points(const std::string& path, InputFormat format, NormOrder p)
{
    PointSet ps;
    ps.p = p;
    if (format == InputFormat::binary) {
        std::ifstream in = open_input(path, std::ios::binary);
        std::uint64_t header[2] = {0, 0};
        in.read(reinterpret_cast<char*>(header), sizeof header);
        if (!in) {
            fail(ErrorKind::input, path + ": truncated header");
        }
        ps.n = header[0];
        ps.d = header[1];
        if (ps.d == 0 || ps.n > (std::uint64_t{1} << 32) || ps.d > (std::uint64_t{1} << 32)) {
            fail(ErrorKind::input, path + ": implausible dimensions");
        }
        ps.coords.resize(ps.n * ps.d);
        in.read(reinterpret_cast<char*>(ps.coords.data()), static_cast<std::streamsize>(ps.coords.size() * 8));
        if (!in || in.peek() != std::char_traits<char>::eof()) {
            fail(ErrorKind::input, path + ": payload does not match n*d doubles");
        }
        return ps;
    }
    if (format == InputFormat::metric) {
        fail(ErrorKind::invalid_argument, "metric input goes through read_metric");
    }
    std::ifstream in = open_input(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string token;
        std::size_t count = 0;
        while (fields >> token) {
            ps.coords.push_back(parse_number(token, path + ":" + std::to_string(line_no)));
            ++count;
        }
        if (count == 0) {
            continue;
        }
        if (ps.n == 0) {
            ps.d = count;
        } else if (count != ps.d) {
            fail(ErrorKind::input, path + ":" + std::to_string(line_no) + ": expected " + std::to_string(ps.d) +
                                       " coordinates");
        }
        ++ps.n;
    }
    return ps;
}

void scale_points(PointSet& ps)
{
    for (double c : ps.coords) {
        if (!std::isfinite(c)) {
            fail(ErrorKind::input, "non-finite coordinate");
        }
    }
    require(ps.coords.size() == ps.n * ps.d, ErrorKind::input, "coordinate count mismatch");
    if (ps.n < 2) {
        ps.scale_exponent = 0;
        ps.phi = 1.0;
        return;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t i = 0; i < ps.n; ++i) {
        for (std::size_t j = i + 1; j < ps.n; ++j) {
            const double dij = ps.distance(i, j);
            if (dij == 0.0) {
                fail(ErrorKind::input, "duplicate points " + std::to_string(i) + " and " + std::to_string(j));
            }
            lo = std::min(lo, dij);
            hi = std::max(hi, dij);
        }
    }
    int e = static_cast<int>(std::floor(std::log2(lo)));
    while (std::ldexp(lo, -e) < 1.0) {
        --e;
    }
    while (std::ldexp(lo, -e) >= 2.0) {
        ++e;
    }
    for (auto& c : ps.coords) {
        c = std::ldexp(c, -e);
    }
    ps.scale_exponent += e;
    ps.phi = std::ldexp(hi, -e);
}

void GeneralMetric::validate(bool check_triangle) const
{
    require(entries.size() == n * n, ErrorKind::input, "metric matrix has the wrong size");
    for (std::size_t i = 0; i < n; ++i) {
        require((*this)(i, i) == 0.0, ErrorKind::input, "metric diagonal must be zero");
        for (std::size_t j = 0; j < n; ++j) {
            const double v = (*this)(i, j);
            require(std::isfinite(v), ErrorKind::input, "non-finite metric entry");
            require(v == (*this)(j, i), ErrorKind::input, "metric matrix is not symmetric");
            require(i == j || v > 0.0, ErrorKind::input, "distinct points at distance zero");
        }
    }
    if (!check_triangle) {
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dij = (*this)(i, j);
            for (std::size_t k = 0; k < n; ++k) {
                if (dij > ((*this)(i, k) + (*this)(k, j)) * (1.0 + 1e-12)) {
                    fail(ErrorKind::input, "triangle inequality fails for " + std::to_string(i) + ", " +
                                               std::to_string(j) + " via " + std::to_string(k));
                }
            }
        }
    }
}

GeneralMetric read_metric(const std::string& path)
{
    std::ifstream in = open_input(path);
    std::string token;
    GeneralMetric m;
    if (!(in >> token)) {
        fail(ErrorKind::input, path + ": empty metric file");
    }
    const double n = parse_number(token, path);
    if (n < 1 || n != std::floor(n) || n > 1e5) {
        fail(ErrorKind::input, path + ": bad point count");
    }
    m.n = static_cast<std::size_t>(n);
    m.entries.reserve(m.n * m.n);
    while (in >> token) {
        m.entries.push_back(parse_number(token, path));
    }
    if (m.entries.size() != m.n * m.n) {
        fail(ErrorKind::input, path + ": expected " + std::to_string(m.n * m.n) + " entries");
    }
    return m;
}

void write_metric(const GeneralMetric& m, const std::string& path)
{
    std::ofstream out = open_output(path);
    out << m.n << '\n';
    for (std::size_t i = 0; i < m.n; ++i) {
        for (std::size_t j = 0; j < m.n; ++j) {
            out << (j ? " " : "") << m(i, j);
        }
        out << '\n';
    }
}

PointSet embed_general_metric(const GeneralMetric& m)
{
    PointSet ps;
    ps.n = m.n;
    ps.d = m.n;
    ps.p = NormOrder::infinity();
    ps.coords = m.entries;
    return ps;
}

PointSet ingest_points(const std::string& path, InputFormat format, NormOrder p, bool force_triangle_check)
{
    PointSet ps;
    if (format == InputFormat::metric) {
        const GeneralMetric m = read_metric(path);
        m.validate(force_triangle_check || m.n <= 500);
        ps = embed_general_metric(m);
    } else {
        ps = read_points(path, format, p);
    }
    if (ps.n < 2) {
        fail(ErrorKind::input, path + ": need at least two points");
    }
    scale_points(ps);
    return ps;
}

void write_points_text(const PointSet& ps, const std::string& path)
{
    std::ofstream out = open_output(path);
    for (std::size_t i = 0; i < ps.n; ++i) {
        const auto row = ps.row(i);
        for (std::size_t j = 0; j < ps.d; ++j) {
            out << (j ? " " : "") << row[j];
        }
        out << '\n';
    }
}

std::string DistortionReport::summary_json() const
{
    nlohmann::json j;
    j["pairs"] = pairs.size();
    j["error_on"] = squared ? "squared_distance" : "distance";
    j["band"] = band;
    j["max_error"] = max_error;
    j["mean_error"] = mean_error;
    j["p99_error"] = p99_error;
    j["fraction_in_band"] = fraction_in_band;
    j["breaches"] = breaches;
    j["size_bits"] = {{"header", sizes.header},       {"topology", sizes.topology},
                      {"long_edges", sizes.long_edges}, {"centers", sizes.centers},
                      {"ingresses", sizes.ingresses}, {"gammas", sizes.gammas},
                      {"etas", sizes.etas},           {"leaf_etas", sizes.leaf_etas},
                      {"landmarks", sizes.landmarks}, {"augmentations", sizes.augmentations},
                      {"total", sizes.total()}};
    j["build_seconds"] = build_seconds;
    j["query_seconds"] = query_seconds;
    j["seed"] = seed;
    return j.dump(2);
}

void DistortionReport::write_pairs(std::ostream& out) const
{
    const auto precision = out.precision(17);
    for (const PairRecord& r : pairs) {
        out << r.i << ' ' << r.j << ' ' << r.exact << ' ' << r.estimate << ' ' << r.error << '\n';
    }
    out.precision(precision);
}

DistortionReport evaluate(const SketchBits& bits, const PointSet& ps, double band)
{
    const QueryContext ctx(bits);
    const SketchHeader& h = ctx.tree().header;
    require(h.n == ps.n, ErrorKind::input, "sketch and points disagree on n");
    DistortionReport report;
    report.squared = h.kind == SketchKind::euclidean;
    if (report.squared) {
        require(ps.p == NormOrder::finite(2), ErrorKind::input, "euclidean sketch needs Euclidean points");
    } else {
        require(h.d == ps.d && h.p == ps.p && h.scale_exponent == ps.scale_exponent, ErrorKind::input,
                "sketch and points disagree on d, p or scale");
    }
    report.band = band;
    report.sizes = size_report(bits);
    report.pairs.reserve(ps.n * (ps.n - 1) / 2);
    const auto start = std::chrono::steady_clock::now();
    for (std::uint64_t i = 0; i < ps.n; ++i) {
        for (std::uint64_t j = i + 1; j < ps.n; ++j) {
            PairRecord r{i, j, std::ldexp(ps.distance(i, j), static_cast<int>(ps.scale_exponent)), ctx.estimate(i, j),
                         0.0};
            r.error = report.squared ? std::abs(r.estimate * r.estimate - r.exact * r.exact) / (r.exact * r.exact)
                                     : std::abs(r.estimate - r.exact) / r.exact;
            report.pairs.push_back(r);
        }
    }
    report.query_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::vector<double> errors;
    errors.reserve(report.pairs.size());
    for (const PairRecord& r : report.pairs) {
        errors.push_back(r.error);
        if (!(r.error <= band)) {
            ++report.breaches;
        }
    }
    if (!errors.empty()) {
        report.max_error = *std::max_element(errors.begin(), errors.end());
        report.mean_error = std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
        std::sort(errors.begin(), errors.end());
        const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(errors.size())));
        report.p99_error = errors[std::max<std::size_t>(rank, 1) - 1];
        report.fraction_in_band =
            1.0 - static_cast<double>(report.breaches) / static_cast<double>(report.pairs.size());
    } else {
        report.fraction_in_band = 1.0;
    }
    return report;
}

LowerBoundEuclidean gen_lowerbound_euclidean(std::size_t n, double eps, std::uint64_t seed)
{
    require(eps > 0.0 && eps <= 1.0, ErrorKind::invalid_argument, "eps must lie in (0, 1]");
    const double inv = 1.0 / (eps * eps);
    const auto k = static_cast<std::size_t>(std::llround(inv));
    require(std::abs(inv - static_cast<double>(k)) < 1e-9, ErrorKind::invalid_argument, "1/eps^2 must be an integer");
    require(k <= n, ErrorKind::invalid_argument, "sparsity 1/eps^2 exceeds n");

    std::mt19937_64 rng(seed);
    std::set<std::vector<std::uint32_t>> seen;
    std::vector<std::uint32_t> pool(n);
    LowerBoundEuclidean out;
    out.bits.assign(n * n, 0);
    std::size_t attempts = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::uint32_t> support;
        do {
            require(++attempts <= 1000 * n + 1000, ErrorKind::invalid_argument, "not enough distinct supports");
            std::iota(pool.begin(), pool.end(), 0u);
            for (std::size_t t = 0; t < k; ++t) {
                std::uniform_int_distribution<std::size_t> pick(t, n - 1);
                std::swap(pool[t], pool[pick(rng)]);
            }
            support.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
            std::sort(support.begin(), support.end());
        } while (!seen.insert(support).second);
        for (std::uint32_t j : support) {
            out.bits[i * n + j] = 1;
        }
    }

    PointSet& ps = out.points;
    ps.n = 2 * n;
    ps.d = n;
    ps.p = NormOrder::finite(2);
    ps.coords.assign(2 * n * n, 0.0);
    const double value = 1.0 / std::sqrt(static_cast<double>(k));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (out.bits[i * n + j]) {
                ps.coords[i * n + j] = value;
            }
        }
        ps.coords[(n + i) * n + i] = 1.0;
    }
    return out;
}

LowerBoundGeneral gen_lowerbound_general(std::size_t n, double eps, std::uint64_t seed)
{
    require(eps > 0.0 && eps <= 1.0, ErrorKind::invalid_argument, "eps must lie in (0, 1]");
    const auto m = static_cast<std::uint32_t>(std::llround(1.0 / eps));
    require(std::abs(1.0 / eps - m) < 1e-9, ErrorKind::invalid_argument, "1/eps must be an integer");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint32_t> pick(0, m - 1);
    LowerBoundGeneral out;
    out.metric.n = n;
    out.metric.entries.assign(n * n, 0.0);
    out.k.assign(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const std::uint32_t k = pick(rng);
            out.k[i * n + j] = out.k[j * n + i] = k;
            out.metric.entries[i * n + j] = out.metric.entries[j * n + i] = 1.0 + k * eps;
        }
    }
    return out;
}

std::vector<std::uint8_t> recover_bits(const DistanceOracle& oracle, std::size_t n, double eps)
{
    const double threshold = 2.0 - eps - eps * eps / 2.0;
    std::vector<std::uint8_t> bits(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double est = oracle(i, n + j);
            bits[i * n + j] = est * est <= threshold ? 1 : 0;
        }
    }
    return bits;
}

std::vector<std::uint32_t> recover_general(const DistanceOracle& oracle, std::size_t n, double eps)
{
    std::vector<std::uint32_t> k(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double r = std::round((oracle(i, j) - 1.0) / eps);
            k[i * n + j] = k[j * n + i] = static_cast<std::uint32_t>(std::max(0.0, r));
        }
    }
    return k;
}

template <typename T>
void write_matrix(std::ostream& out, const std::vector<T>& m, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out << (j ? " " : "") << static_cast<std::uint64_t>(m[i * n + j]);
        }
        out << '\n';
    }
}

template void write_matrix<std::uint8_t>(std::ostream&, const std::vector<std::uint8_t>&, std::size_t);
template void write_matrix<std::uint32_t>(std::ostream&, const std::vector<std::uint32_t>&, std::size_t);

std::vector<std::uint32_t> read_matrix(const std::string& path)
{
    std::ifstream in = open_input(path);
    std::vector<std::uint32_t> out;
    std::string token;
    while (in >> token) {
        const double v = parse_number(token, path);
        if (v < 0 || v != std::floor(v) || v > 4294967295.0) {
            fail(ErrorKind::input, path + ": matrix entries must be non-negative integers");
        }
        out.push_back(static_cast<std::uint32_t>(v));
    }
    return out;
}

} // namespace msketch
