#ifndef MSKETCH_H
#define MSKETCH_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define MSK_API __declspec(dllexport)
#else
#  define MSK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum msk_status {
    MSK_OK = 0,
    MSK_ERR_INVALID_ARGUMENT = 1,
    MSK_ERR_PRECONDITION = 2,
    MSK_ERR_INPUT = 3,
    MSK_ERR_DECODE = 4,
    MSK_ERR_INTERNAL = 5
} msk_status;

/* Opaque handles. */
typedef struct msk_points msk_points;
typedef struct msk_sketch msk_sketch;

/* Message of the last failed call on this thread; empty when none. */
MSK_API const char* msk_last_error(void);
MSK_API const char* msk_version(void);

/* p = 0 selects the max norm. */
#define MSK_NORM_MAX 0u

/* Point sets. Coordinates are scaled on creation so the minimum distance lies
   in [1, 2); distances reported by the library are in the caller's units. */
MSK_API msk_status msk_points_from_array(const double* coords, uint64_t n, uint64_t d, uint32_t p, msk_points** out);
/* format: "text", "binary" or "metric" (metric inputs ignore p). */
MSK_API msk_status msk_points_load(const char* path, const char* format, uint32_t p, int force_triangle_check,
                                   msk_points** out);
/* Row-major n*n distance matrix, embedded under the max norm. */
MSK_API msk_status msk_points_from_metric(const double* matrix, uint64_t n, int check_triangle, msk_points** out);
MSK_API void msk_points_free(msk_points* points);
MSK_API msk_status msk_points_shape(const msk_points* points, uint64_t* n, uint64_t* d, int64_t* scale_exponent);
MSK_API msk_status msk_points_distance(const msk_points* points, uint64_t i, uint64_t j, double* out);

/* Sketches. An lp sketch built at eps answers within (1 +- 4 eps). */
MSK_API msk_status msk_sketch_build_lp(const msk_points* points, double eps, msk_sketch** out);
/* Euclidean sketch: random projection plus randomized roundings, seeded. */
MSK_API msk_status msk_sketch_build_euclidean(const msk_points* points, double eps, uint64_t seed,
                                              msk_sketch** out);
MSK_API msk_status msk_sketch_from_bytes(const uint8_t* data, size_t size, msk_sketch** out);
MSK_API msk_status msk_sketch_load(const char* path, msk_sketch** out);
MSK_API msk_status msk_sketch_save(const msk_sketch* sketch, const char* path);
/* Borrowed view, valid until the sketch is freed. */
MSK_API msk_status msk_sketch_bytes(const msk_sketch* sketch, const uint8_t** data, size_t* size);
MSK_API void msk_sketch_free(msk_sketch* sketch);

MSK_API msk_status msk_sketch_estimate(const msk_sketch* sketch, uint64_t i, uint64_t j, double* out);

typedef struct msk_sketch_info {
    uint64_t n;
    uint64_t d;
    uint32_t p;
    int euclidean;
    double eps;
    int64_t scale_exponent;
    uint64_t phi_exponent;
    uint64_t nodes;
    uint64_t subtree_leaves;
    uint64_t landmarks;
} msk_sketch_info;

MSK_API msk_status msk_sketch_info_get(const msk_sketch* sketch, msk_sketch_info* out);

typedef struct msk_size_report {
    uint64_t header;
    uint64_t topology;
    uint64_t long_edges;
    uint64_t centers;
    uint64_t ingresses;
    uint64_t gammas;
    uint64_t etas;
    uint64_t leaf_etas;
    uint64_t landmarks;
    uint64_t augmentations;
    uint64_t total;
} msk_size_report;

MSK_API msk_status msk_sketch_size_report(const msk_sketch* sketch, msk_size_report* out);

typedef struct msk_eval_summary {
    uint64_t pairs;
    uint64_t breaches;
    int squared; /* errors are on squared distances */
    double band;
    double max_error;
    double mean_error;
    double p99_error;
    double fraction_in_band;
    double query_seconds;
} msk_eval_summary;

/* Compares every pair against brute force. When report_path is not NULL, per-pair
   lines go there and a JSON summary to report_path + ".summary.json". */
MSK_API msk_status msk_evaluate(const msk_sketch* sketch, const msk_points* points, double band,
                                const char* report_path, double build_seconds, uint64_t seed,
                                msk_eval_summary* out);

/* Lower-bound instances. The Euclidean one writes 2n points (text) and the
   planted n*n bit matrix; the general one writes the metric and its k matrix. */
MSK_API msk_status msk_gen_lb_euclidean(uint64_t n, double eps, uint64_t seed, const char* points_path,
                                        const char* bits_path);
MSK_API msk_status msk_gen_lb_general(uint64_t n, double eps, uint64_t seed, const char* metric_path,
                                      const char* k_path);

/* Recovers the planted matrix from a sketch of a lower-bound instance: bits for a
   euclidean sketch over 2n points, k values for an lp sketch over n points.
   out receives n*n entries. */
MSK_API msk_status msk_recover(const msk_sketch* sketch, uint64_t n, double eps, uint32_t* out);

#ifdef __cplusplus
}
#endif

#endif
