#include "msketch/msketch.h"

#include "msketch/codec.hpp"
#include "msketch/error.hpp"
#include "msketch/estimator.hpp"
#include "msketch/euclid.hpp"
#include "msketch/harness.hpp"
#include "msketch/tree_builder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <string>

struct msk_points {
    msketch::PointSet points;
};

struct msk_sketch {
    msketch::SketchBits bits;
    std::unique_ptr<msketch::QueryContext> ctx;
};

namespace {

thread_local std::string g_last_error;

msk_status to_status(msketch::ErrorKind kind)
{
    switch (kind) {
    case msketch::ErrorKind::invalid_argument:
        return MSK_ERR_INVALID_ARGUMENT;
    case msketch::ErrorKind::precondition:
        return MSK_ERR_PRECONDITION;
    case msketch::ErrorKind::input:
        return MSK_ERR_INPUT;
    case msketch::ErrorKind::decode:
        return MSK_ERR_DECODE;
    case msketch::ErrorKind::internal:
        return MSK_ERR_INTERNAL;
    }
    return MSK_ERR_INTERNAL;
}

template <typename F>
msk_status guarded(F&& body)
{
    try {
        g_last_error.clear();
        body();
        return MSK_OK;
    } catch (const msketch::Error& e) {
        g_last_error = e.what();
        return to_status(e.kind());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return MSK_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return MSK_ERR_INTERNAL;
    }
}

void need(const void* ptr, const char* what)
{
    msketch::require(ptr != nullptr, msketch::ErrorKind::invalid_argument, std::string(what) + " is null");
}

msketch::NormOrder norm_of(std::uint32_t p)
{
    return p == MSK_NORM_MAX ? msketch::NormOrder::infinity() : msketch::NormOrder::finite(p);
}

msk_sketch* wrap(msketch::SketchBits bits)
{
    auto s = std::make_unique<msk_sketch>();
    s->ctx = std::make_unique<msketch::QueryContext>(bits);
    s->bits = std::move(bits);
    return s.release();
}

} // namespace

extern "C" {

const char* msk_last_error(void) { return g_last_error.c_str(); }

const char* msk_version(void) { return "1.0.0"; }

msk_status msk_points_from_array(const double* coords, uint64_t n, uint64_t d, uint32_t p, msk_points** out)
{
    return guarded([&] {
        need(coords, "coords");
        need(out, "out");
        msketch::require(n >= 1 && d >= 1, msketch::ErrorKind::invalid_argument, "empty point set");
        auto h = std::make_unique<msk_points>();
        h->points.n = n;
        h->points.d = d;
        h->points.p = norm_of(p);
        h->points.coords.assign(coords, coords + n * d);
        msketch::scale_points(h->points);
        *out = h.release();
    });
}

msk_status msk_points_load(const char* path, const char* format, uint32_t p, int force_triangle_check,
                           msk_points** out)
{
    return guarded([&] {
        need(path, "path");
        need(format, "format");
        need(out, "out");
        auto h = std::make_unique<msk_points>();
        h->points = msketch::ingest_points(path, msketch::parse_format(format), norm_of(p), force_triangle_check != 0);
        *out = h.release();
    });
}

msk_status msk_points_from_metric(const double* matrix, uint64_t n, int check_triangle, msk_points** out)
{
    return guarded([&] {
        need(matrix, "matrix");
        need(out, "out");
        msketch::GeneralMetric m;
        m.n = n;
        m.entries.assign(matrix, matrix + n * n);
        m.validate(check_triangle != 0);
        auto h = std::make_unique<msk_points>();
        h->points = msketch::embed_general_metric(m);
        msketch::scale_points(h->points);
        *out = h.release();
    });
}

void msk_points_free(msk_points* points) { delete points; }

msk_status msk_points_shape(const msk_points* points, uint64_t* n, uint64_t* d, int64_t* scale_exponent)
{
    return guarded([&] {
        need(points, "points");
        if (n) {
            *n = points->points.n;
        }
        if (d) {
            *d = points->points.d;
        }
        if (scale_exponent) {
            *scale_exponent = points->points.scale_exponent;
        }
    });
}

msk_status msk_points_distance(const msk_points* points, uint64_t i, uint64_t j, double* out)
{
    return guarded([&] {
        need(points, "points");
        need(out, "out");
        const auto& ps = points->points;
        msketch::require(i < ps.n && j < ps.n, msketch::ErrorKind::invalid_argument, "point index out of range");
        *out = std::ldexp(ps.distance(i, j), static_cast<int>(ps.scale_exponent));
    });
}

msk_status msk_sketch_build_lp(const msk_points* points, double eps, msk_sketch** out)
{
    return guarded([&] {
        need(points, "points");
        need(out, "out");
        const auto tree = msketch::build_tree(points->points, eps);
        *out = wrap(msketch::encode(tree.sketch));
    });
}

msk_status msk_sketch_build_euclidean(const msk_points* points, double eps, uint64_t seed, msk_sketch** out)
{
    return guarded([&] {
        need(points, "points");
        need(out, "out");
        auto e = msketch::build_euclidean_sketch(points->points, eps, seed);
        *out = wrap(std::move(e.bits));
    });
}

msk_status msk_sketch_from_bytes(const uint8_t* data, size_t size, msk_sketch** out)
{
    return guarded([&] {
        need(data, "data");
        need(out, "out");
        *out = wrap(msketch::SketchBits(std::vector<std::uint8_t>(data, data + size)));
    });
}

msk_status msk_sketch_load(const char* path, msk_sketch** out)
{
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = wrap(msketch::SketchBits::load(path));
    });
}

msk_status msk_sketch_save(const msk_sketch* sketch, const char* path)
{
    return guarded([&] {
        need(sketch, "sketch");
        need(path, "path");
        sketch->bits.save(path);
    });
}

msk_status msk_sketch_bytes(const msk_sketch* sketch, const uint8_t** data, size_t* size)
{
    return guarded([&] {
        need(sketch, "sketch");
        need(data, "data");
        need(size, "size");
        *data = sketch->bits.bytes().data();
        *size = sketch->bits.bytes().size();
    });
}

void msk_sketch_free(msk_sketch* sketch) { delete sketch; }

msk_status msk_sketch_estimate(const msk_sketch* sketch, uint64_t i, uint64_t j, double* out)
{
    return guarded([&] {
        need(sketch, "sketch");
        need(out, "out");
        *out = sketch->ctx->estimate(i, j);
    });
}

msk_status msk_sketch_info_get(const msk_sketch* sketch, msk_sketch_info* out)
{
    return guarded([&] {
        need(sketch, "sketch");
        need(out, "out");
        const auto& t = sketch->ctx->tree();
        const auto& h = t.header;
        out->n = h.n;
        out->d = h.d;
        out->p = static_cast<std::uint32_t>(h.p.code());
        out->euclidean = h.kind == msketch::SketchKind::euclidean;
        out->eps = h.eps.value();
        out->scale_exponent = h.scale_exponent;
        out->phi_exponent = h.phi_exponent;
        out->nodes = t.nodes.size();
        out->subtree_leaves = t.subtree_leaves.size();
        out->landmarks = t.landmarks.size();
    });
}

msk_status msk_sketch_size_report(const msk_sketch* sketch, msk_size_report* out)
{
    return guarded([&] {
        need(sketch, "sketch");
        need(out, "out");
        const msketch::SizeReport r = msketch::size_report(sketch->bits);
        *out = msk_size_report{r.header,    r.topology, r.long_edges, r.centers,       r.ingresses, r.gammas,
                               r.etas,      r.leaf_etas, r.landmarks, r.augmentations, r.total()};
    });
}

msk_status msk_evaluate(const msk_sketch* sketch, const msk_points* points, double band, const char* report_path,
                        double build_seconds, uint64_t seed, msk_eval_summary* out)
{
    return guarded([&] {
        need(sketch, "sketch");
        need(points, "points");
        need(out, "out");
        msketch::DistortionReport r = msketch::evaluate(sketch->bits, points->points, band);
        r.build_seconds = build_seconds;
        r.seed = seed;
        if (report_path != nullptr) {
            std::ofstream pairs(report_path, std::ios::trunc);
            std::ofstream summary(std::string(report_path) + ".summary.json", std::ios::trunc);
            msketch::require(pairs && summary, msketch::ErrorKind::input,
                             std::string("cannot write report ") + report_path);
            r.write_pairs(pairs);
            summary << r.summary_json() << '\n';
        }
        *out = msk_eval_summary{r.pairs.size(), r.breaches,  r.squared,          r.band,         r.max_error,
                                r.mean_error,   r.p99_error, r.fraction_in_band, r.query_seconds};
    });
}

msk_status msk_gen_lb_euclidean(uint64_t n, double eps, uint64_t seed, const char* points_path, const char* bits_path)
{
    return guarded([&] {
        need(points_path, "points_path");
        const auto lb = msketch::gen_lowerbound_euclidean(n, eps, seed);
        msketch::write_points_text(lb.points, points_path);
        if (bits_path != nullptr) {
            std::ofstream out(bits_path, std::ios::trunc);
            msketch::require(static_cast<bool>(out), msketch::ErrorKind::input,
                             std::string("cannot write ") + bits_path);
            msketch::write_matrix(out, lb.bits, n);
        }
    });
}

msk_status msk_gen_lb_general(uint64_t n, double eps, uint64_t seed, const char* metric_path, const char* k_path)
{
    return guarded([&] {
        need(metric_path, "metric_path");
        const auto lb = msketch::gen_lowerbound_general(n, eps, seed);
        msketch::write_metric(lb.metric, metric_path);
        if (k_path != nullptr) {
            std::ofstream out(k_path, std::ios::trunc);
            msketch::require(static_cast<bool>(out), msketch::ErrorKind::input, std::string("cannot write ") + k_path);
            msketch::write_matrix(out, lb.k, n);
        }
    });
}

msk_status msk_recover(const msk_sketch* sketch, uint64_t n, double eps, uint32_t* out)
{
    return guarded([&] {
        need(sketch, "sketch");
        need(out, "out");
        const auto& ctx = *sketch->ctx;
        const auto oracle = [&](std::uint64_t i, std::uint64_t j) { return ctx.estimate(i, j); };
        if (ctx.tree().header.kind == msketch::SketchKind::euclidean) {
            msketch::require(ctx.tree().header.n == 2 * n, msketch::ErrorKind::invalid_argument,
                             "euclidean recovery expects a sketch over 2n points");
            const auto bits = msketch::recover_bits(oracle, n, eps);
            std::copy(bits.begin(), bits.end(), out);
        } else {
            msketch::require(ctx.tree().header.n == n, msketch::ErrorKind::invalid_argument,
                             "general recovery expects a sketch over n points");
            const auto k = msketch::recover_general(oracle, n, eps);
            std::copy(k.begin(), k.end(), out);
        }
    });
}

} // extern "C"
