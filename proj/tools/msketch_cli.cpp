#include "msketch/msketch.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr int kExitBreach = 1;
constexpr int kExitInput = 2;

struct Failure {
    int code;
};

void check(msk_status s)
{
    if (s != MSK_OK) {
        std::cerr << "error: " << msk_last_error() << '\n';
        throw Failure{kExitInput};
    }
}

std::uint32_t parse_norm(const std::string& p)
{
    if (p == "inf" || p == "max") {
        return MSK_NORM_MAX;
    }
    try {
        std::size_t used = 0;
        const unsigned long v = std::stoul(p, &used);
        if (used == p.size() && v >= 1 && v <= 64) {
            return static_cast<std::uint32_t>(v);
        }
    } catch (const std::exception&) {
    }
    std::cerr << "error: --p must be a positive integer or 'inf'\n";
    throw Failure{kExitInput};
}

struct SketchHandle {
    msk_sketch* h = nullptr;
    ~SketchHandle() { msk_sketch_free(h); }
};

struct PointsHandle {
    msk_points* h = nullptr;
    ~PointsHandle() { msk_points_free(h); }
};

nlohmann::json size_json(const msk_size_report& r)
{
    return {{"header", r.header},       {"topology", r.topology}, {"long_edges", r.long_edges},
            {"centers", r.centers},     {"ingresses", r.ingresses}, {"gammas", r.gammas},
            {"etas", r.etas},           {"leaf_etas", r.leaf_etas}, {"landmarks", r.landmarks},
            {"augmentations", r.augmentations}, {"total", r.total}};
}

std::vector<std::uint32_t> read_ints(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        std::cerr << "error: cannot open " << path << '\n';
        throw Failure{kExitInput};
    }
    std::vector<std::uint32_t> out;
    std::uint64_t v = 0;
    while (in >> v) {
        out.push_back(static_cast<std::uint32_t>(v));
    }
    if (!in.eof()) {
        std::cerr << "error: " << path << " holds a non-integer entry\n";
        throw Failure{kExitInput};
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Distance sketches for finite point sets"};
    app.require_subcommand(1);

    std::string input;
    std::string format = "text";
    std::string norm = "2";
    double eps = 0.0;
    bool euclidean = false;
    bool quarter_eps = false;
    bool check_triangle = false;
    std::uint64_t seed = 0;
    std::string out;

    auto* sketch = app.add_subcommand("sketch", "Build a sketch from a point file");
    sketch->add_option("--input", input, "Point or metric file")->required();
    sketch->add_option("--format", format, "text, binary or metric")->check(CLI::IsMember({"text", "binary", "metric"}));
    sketch->add_option("--p", norm, "Norm order: positive integer or inf");
    sketch->add_option("--eps", eps, "Distortion parameter in (0, 1)")->required();
    sketch->add_flag("--euclidean", euclidean, "Randomized Euclidean sketch (needs --p 2)");
    sketch->add_flag("--quarter-eps", quarter_eps, "Build at eps/4 so lp estimates land within (1 +- eps)");
    sketch->add_flag("--check-triangle", check_triangle, "Always validate the triangle inequality of metric input");
    sketch->add_option("--seed", seed, "Seed for the Euclidean sketch");
    sketch->add_option("--out", out, "Sketch file to write")->required();

    std::string sketch_path;
    std::uint64_t qi = 0;
    std::uint64_t qj = 0;
    auto* estimate = app.add_subcommand("estimate", "Estimate one distance (0-based point indices)");
    estimate->add_option("--sketch", sketch_path)->required();
    estimate->add_option("--i", qi)->required();
    estimate->add_option("--j", qj)->required();

    double band = 0.0;
    double min_fraction = 1.0;
    std::string report;
    auto* evaluate = app.add_subcommand("evaluate", "Compare every pair against brute force");
    evaluate->add_option("--sketch", sketch_path)->required();
    evaluate->add_option("--input", input)->required();
    evaluate->add_option("--format", format)->check(CLI::IsMember({"text", "binary", "metric"}));
    evaluate->add_option("--p", norm);
    evaluate->add_option("--band", band, "Allowed relative error (squared distances for Euclidean sketches)")
        ->required();
    evaluate->add_option("--min-fraction", min_fraction, "Fraction of pairs that must lie in the band");
    evaluate->add_option("--report", report, "Per-pair report; a JSON summary goes next to it");
    evaluate->add_flag("--check-triangle", check_triangle);

    std::uint64_t n = 0;
    std::string side;
    auto* gen_euclid = app.add_subcommand("gen-lb-euclidean", "Sparse-vector instance with planted bits");
    gen_euclid->add_option("--n", n)->required();
    gen_euclid->add_option("--eps", eps)->required();
    gen_euclid->add_option("--seed", seed);
    gen_euclid->add_option("--out", out, "Point file (text)")->required();
    gen_euclid->add_option("--bits", side, "Planted bit matrix (default: <out>.bits)");

    auto* gen_general = app.add_subcommand("gen-lb-general", "Random metric with distances 1 + k eps");
    gen_general->add_option("--n", n)->required();
    gen_general->add_option("--eps", eps)->required();
    gen_general->add_option("--seed", seed);
    gen_general->add_option("--out", out, "Metric file")->required();
    gen_general->add_option("--k", side, "Planted k matrix (default: <out>.k)");

    std::string expect;
    auto* recover = app.add_subcommand("recover", "Recover the planted matrix of a lower-bound instance");
    recover->add_option("--sketch", sketch_path)->required();
    recover->add_option("--n", n)->required();
    recover->add_option("--eps", eps)->required();
    recover->add_option("--out", out, "Write the matrix here instead of stdout");
    recover->add_option("--expect", expect, "Planted matrix to compare against");

    auto* info = app.add_subcommand("info", "Header fields and per-section bit counts");
    info->add_option("--sketch", sketch_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }

    try {
        if (*sketch) {
            PointsHandle points;
            check(msk_points_load(input.c_str(), format.c_str(), parse_norm(norm), check_triangle, &points.h));
            SketchHandle s;
            const double build_eps = quarter_eps ? eps / 4 : eps;
            const auto start = std::chrono::steady_clock::now();
            if (euclidean) {
                check(msk_sketch_build_euclidean(points.h, build_eps, seed, &s.h));
            } else {
                check(msk_sketch_build_lp(points.h, build_eps, &s.h));
            }
            const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            check(msk_sketch_save(s.h, out.c_str()));
            msk_size_report r;
            check(msk_sketch_size_report(s.h, &r));
            std::cout << out << ": " << r.total << " bits, built in " << seconds << " s\n";
        } else if (*estimate) {
            SketchHandle s;
            check(msk_sketch_load(sketch_path.c_str(), &s.h));
            double v = 0.0;
            check(msk_sketch_estimate(s.h, qi, qj, &v));
            std::printf("%.17g\n", v);
        } else if (*evaluate) {
            SketchHandle s;
            check(msk_sketch_load(sketch_path.c_str(), &s.h));
            PointsHandle points;
            check(msk_points_load(input.c_str(), format.c_str(), parse_norm(norm), check_triangle, &points.h));
            msk_eval_summary sum;
            check(msk_evaluate(s.h, points.h, band, report.empty() ? nullptr : report.c_str(), 0.0, seed, &sum));
            nlohmann::json j{{"pairs", sum.pairs},
                             {"error_on", sum.squared ? "squared_distance" : "distance"},
                             {"band", sum.band},
                             {"max_error", sum.max_error},
                             {"mean_error", sum.mean_error},
                             {"p99_error", sum.p99_error},
                             {"fraction_in_band", sum.fraction_in_band},
                             {"breaches", sum.breaches},
                             {"query_seconds", sum.query_seconds}};
            std::cout << j.dump(2) << '\n';
            if (sum.fraction_in_band < min_fraction) {
                return kExitBreach;
            }
        } else if (*gen_euclid) {
            const std::string bits = side.empty() ? out + ".bits" : side;
            check(msk_gen_lb_euclidean(n, eps, seed, out.c_str(), bits.c_str()));
            std::cout << "wrote " << 2 * n << " points to " << out << " and planted bits to " << bits << '\n';
        } else if (*gen_general) {
            const std::string k = side.empty() ? out + ".k" : side;
            check(msk_gen_lb_general(n, eps, seed, out.c_str(), k.c_str()));
            std::cout << "wrote a " << n << "-point metric to " << out << " and planted values to " << k << '\n';
        } else if (*recover) {
            SketchHandle s;
            check(msk_sketch_load(sketch_path.c_str(), &s.h));
            std::vector<std::uint32_t> m(n * n);
            check(msk_recover(s.h, n, eps, m.data()));
            std::ofstream file;
            if (!out.empty()) {
                file.open(out, std::ios::trunc);
                if (!file) {
                    std::cerr << "error: cannot write " << out << '\n';
                    return kExitInput;
                }
            }
            std::ostream& dst = out.empty() ? std::cout : file;
            for (std::uint64_t i = 0; i < n; ++i) {
                for (std::uint64_t j = 0; j < n; ++j) {
                    dst << (j ? " " : "") << m[i * n + j];
                }
                dst << '\n';
            }
            if (!expect.empty()) {
                const auto planted = read_ints(expect);
                if (planted.size() != m.size()) {
                    std::cerr << "error: " << expect << " does not hold an n x n matrix\n";
                    return kExitInput;
                }
                std::uint64_t wrong = 0;
                for (std::size_t k = 0; k < m.size(); ++k) {
                    wrong += planted[k] != m[k];
                }
                std::cerr << "recovered " << m.size() - wrong << " of " << m.size() << " entries\n";
                if (wrong != 0) {
                    return kExitBreach;
                }
            }
        } else if (*info) {
            SketchHandle s;
            check(msk_sketch_load(sketch_path.c_str(), &s.h));
            msk_sketch_info hi;
            check(msk_sketch_info_get(s.h, &hi));
            msk_size_report r;
            check(msk_sketch_size_report(s.h, &r));
            nlohmann::json j{{"n", hi.n},
                             {"d", hi.d},
                             {"p", hi.p == MSK_NORM_MAX ? nlohmann::json("inf") : nlohmann::json(hi.p)},
                             {"kind", hi.euclidean ? "euclidean" : "lp"},
                             {"eps", hi.eps},
                             {"scale_exponent", hi.scale_exponent},
                             {"phi_exponent", hi.phi_exponent},
                             {"nodes", hi.nodes},
                             {"subtree_leaves", hi.subtree_leaves},
                             {"landmarks", hi.landmarks},
                             {"size_bits", size_json(r)}};
            std::cout << j.dump(2) << '\n';
        }
    } catch (const Failure& f) {
        return f.code;
    }
    return 0;
}
