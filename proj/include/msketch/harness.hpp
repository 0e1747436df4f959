#pragma once

#include "msketch/codec.hpp"
#include "msketch/metric_core.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace msketch {

enum class InputFormat { text, binary, metric };

InputFormat parse_format(const std::string& name);

/// Unscaled coordinates from a text file (one point per line) or a binary file
/// (u64 n, u64 d, then n*d little-endian doubles).
PointSet read_points(const std::string& path, InputFormat format, NormOrder p);

/// Divides coordinates by M' = 2^floor(log2 M), M the minimum distance, and records
/// scale_exponent and phi. Rejects duplicates and non-finite coordinates.
void scale_points(PointSet& ps);

/// Dense symmetric distance matrix of a finite metric space.
struct GeneralMetric {
    std::size_t n = 0;
    std::vector<double> entries; // row-major n*n

    double operator()(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
    /// Symmetry, zero diagonal, positive off-diagonal; triangle inequality when check_triangle.
    void validate(bool check_triangle) const;
};

/// "n" followed by n*n whitespace-separated entries.
GeneralMetric read_metric(const std::string& path);
void write_metric(const GeneralMetric& m, const std::string& path);

/// x_i = row i of the matrix, under the max norm. Not scaled.
PointSet embed_general_metric(const GeneralMetric& m);

/// Reads any supported input and applies scale_points. Metric inputs are
/// validated (the O(n^3) triangle check runs for n <= 500 or when forced) and embedded.
PointSet ingest_points(const std::string& path, InputFormat format, NormOrder p, bool force_triangle_check = false);

void write_points_text(const PointSet& ps, const std::string& path);

struct PairRecord {
    std::uint64_t i = 0;
    std::uint64_t j = 0;
    double exact = 0.0;
    double estimate = 0.0;
    double error = 0.0;
};

/// Relative errors are on distances for lp sketches and on squared distances
/// for euclidean sketches.
struct DistortionReport {
    std::vector<PairRecord> pairs;
    bool squared = false;
    double band = 0.0;
    double max_error = 0.0;
    double mean_error = 0.0;
    double p99_error = 0.0;
    double fraction_in_band = 0.0;
    std::uint64_t breaches = 0;
    SizeReport sizes;
    double build_seconds = 0.0;
    double query_seconds = 0.0;
    std::uint64_t seed = 0;

    /// Summary as a JSON document.
    std::string summary_json() const;
    /// One "i j exact estimate error" line per pair.
    void write_pairs(std::ostream& out) const;
};

/// Compares every pair estimate against brute force. `ps` must be the scaled points the sketch was built from.
DistortionReport evaluate(const SketchBits& bits, const PointSet& ps, double band);

struct LowerBoundEuclidean {
    PointSet points;                 // 2n points in R^n: a_i / sqrt(k) for i < n, then e_j
    std::vector<std::uint8_t> bits;  // a_i(j), row-major n*n
};

/// k = 1/eps^2 must be an integer no larger than n.
LowerBoundEuclidean gen_lowerbound_euclidean(std::size_t n, double eps, std::uint64_t seed);

struct LowerBoundGeneral {
    GeneralMetric metric;         // d(x, y) = 1 + k(x, y) eps
    std::vector<std::uint32_t> k; // row-major n*n, zero diagonal
};

/// 1/eps must be an integer.
LowerBoundGeneral gen_lowerbound_general(std::size_t n, double eps, std::uint64_t seed);

using DistanceOracle = std::function<double(std::uint64_t, std::uint64_t)>;

/// bit(i, j) = 1 iff oracle(i, n + j)^2 <= 2 - eps - eps^2/2.
std::vector<std::uint8_t> recover_bits(const DistanceOracle& oracle, std::size_t n, double eps);

/// k(x, y) = round((oracle(x, y) - 1) / eps); zero diagonal.
std::vector<std::uint32_t> recover_general(const DistanceOracle& oracle, std::size_t n, double eps);

/// Row-major integer matrix, one row per line.
template <typename T>
void write_matrix(std::ostream& out, const std::vector<T>& m, std::size_t n);
std::vector<std::uint32_t> read_matrix(const std::string& path);

} // namespace msketch
