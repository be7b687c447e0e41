/* tearlearn C API.
 *
 * Every object is an opaque handle owned by the caller and released with its
 * *_free function (NULL is accepted). Functions return a tl_status; on failure
 * tl_last_error() describes the problem for the calling thread until the next
 * call into the library. Matrices are exchanged as row-major double arrays,
 * and entry (i, j) of an adjacency matrix is the edge i -> j.
 */
#ifndef TEARLEARN_TEARLEARN_H
#define TEARLEARN_TEARLEARN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(TEARLEARN_BUILDING_LIBRARY)
#    define TL_API __declspec(dllexport)
#  else
#    define TL_API __declspec(dllimport)
#  endif
#else
#  define TL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tl_status {
  TL_OK = 0,
  TL_USAGE = 2,       /* bad argument or configuration */
  TL_DATA = 3,        /* malformed or non-finite input data */
  TL_INFEASIBLE = 4,  /* a cycle cannot be torn under the prior */
  TL_NUMERICAL = 5,   /* training diverged or a matrix overflowed */
  TL_STRUCTURE = 6,   /* structural precondition violated (e.g. cyclic where a DAG is required) */
  TL_IO = 7,          /* file could not be read or written */
  TL_INTERNAL = 8
} tl_status;

typedef struct tl_matrix tl_matrix;
typedef struct tl_dataset tl_dataset;
typedef struct tl_prior tl_prior;
typedef struct tl_train_result tl_train_result;
typedef struct tl_tear_report tl_tear_report;

TL_API const char* tl_version(void);
TL_API const char* tl_last_error(void);
TL_API const char* tl_status_name(tl_status status);

/* Caps Eigen's internal thread count. n <= 0 restores the TEARLEARN_THREADS
 * environment value, or 1 if unset. */
TL_API tl_status tl_set_thread_limit(int n);

/* ---- square weight matrices ------------------------------------------- */

/* Values must be finite with a zero diagonal. */
TL_API tl_status tl_matrix_create(int d, const double* row_major, tl_matrix** out);
TL_API tl_status tl_matrix_clone(const tl_matrix* m, tl_matrix** out);
TL_API void tl_matrix_free(tl_matrix* m);
TL_API int tl_matrix_dim(const tl_matrix* m);
/* Copies d*d values into `row_major`. */
TL_API tl_status tl_matrix_values(const tl_matrix* m, double* row_major);
TL_API tl_status tl_matrix_get(const tl_matrix* m, int i, int j, double* out);
TL_API tl_status tl_matrix_is_acyclic(const tl_matrix* m, int* out);
TL_API tl_status tl_matrix_edge_count(const tl_matrix* m, int* out);
TL_API tl_status tl_matrix_load_json(const char* path, tl_matrix** out);
TL_API tl_status tl_matrix_save_json(const tl_matrix* m, const char* path);

/* h_exp(A) = tr(exp(A o A)) - d, h_poly(A) = tr((I + gamma A o A)^d) - d. */
TL_API tl_status tl_h_exp(const tl_matrix* m, double* out);
TL_API tl_status tl_h_poly(const tl_matrix* m, double gamma, double* out);

/* ---- datasets ---------------------------------------------------------- */

/* n samples by d variables. `names` may be NULL (x0, x1, ...). */
TL_API tl_status tl_dataset_create(int n, int d, const double* row_major, const char* const* names,
                                   tl_dataset** out);
TL_API void tl_dataset_free(tl_dataset* x);
TL_API int tl_dataset_n(const tl_dataset* x);
TL_API int tl_dataset_d(const tl_dataset* x);
TL_API tl_status tl_dataset_values(const tl_dataset* x, double* row_major);
/* Valid until the dataset is freed. */
TL_API const char* tl_dataset_name(const tl_dataset* x, int column);
TL_API tl_status tl_dataset_standardize(const tl_dataset* x, tl_dataset** out);
TL_API tl_status tl_dataset_load_csv(const char* path, tl_dataset** out);
TL_API tl_status tl_dataset_save_csv(const tl_dataset* x, const char* path);

/* ---- prior knowledge --------------------------------------------------- */

typedef enum tl_edge_prior { TL_PRIOR_UNKNOWN = 0, TL_PRIOR_OBLIGATORY = 1, TL_PRIOR_FORBIDDEN = 2 } tl_edge_prior;

/* All off-diagonal entries Unknown; the diagonal is always Forbidden. */
TL_API tl_status tl_prior_create(int d, tl_prior** out);
/* Every edge i -> j with i > j Forbidden. */
TL_API tl_status tl_prior_lower_triangular(int d, tl_prior** out);
TL_API void tl_prior_free(tl_prior* p);
TL_API int tl_prior_dim(const tl_prior* p);
TL_API tl_status tl_prior_set(tl_prior* p, int i, int j, tl_edge_prior value);
TL_API tl_status tl_prior_get(const tl_prior* p, int i, int j, tl_edge_prior* out);
TL_API tl_status tl_prior_load_json(const char* path, tl_prior** out);
TL_API tl_status tl_prior_save_json(const tl_prior* p, const char* path);

/* ---- synthetic data ---------------------------------------------------- */

typedef struct tl_generate_config {
  int d;
  int n;
  double edge_prob;
  double weight_low;  /* |w| drawn uniformly from [weight_low, weight_high], random sign */
  double weight_high;
  double noise_scale;
  uint64_t truth_seed;
  uint64_t noise_seed;
} tl_generate_config;

TL_API tl_generate_config tl_generate_config_default(void);
/* Random strictly upper-triangular W and n samples of
 * x_j = tanh(s) + cos(s) + sin(s) + z_j with s = sum_i x_i W(i, j). */
TL_API tl_status tl_generate(const tl_generate_config* cfg, tl_matrix** truth, tl_dataset** data);
TL_API tl_status tl_truth_save_json(const tl_matrix* truth, const tl_generate_config* cfg, const char* path);
/* Accepts a truth file or a plain matrix file. */
TL_API tl_status tl_truth_load_json(const char* path, tl_matrix** out);

/* ---- training ---------------------------------------------------------- */

typedef enum tl_model { TL_MODEL_LINEAR = 0, TL_MODEL_DAGGNN = 1 } tl_model;
typedef enum tl_h_kind { TL_H_EXP = 0, TL_H_POLY = 1 } tl_h_kind;
typedef enum tl_optimizer { TL_OPT_GD = 0, TL_OPT_ADAM = 1 } tl_optimizer;

typedef struct tl_train_config {
  tl_model model;
  double lambda;
  double alpha0;
  double beta0;
  double beta_max;
  int epochs;      /* passes over the data per outer step */
  double learning_rate;
  tl_h_kind h_kind;
  double gamma;    /* polynomial form only; <= 0 means 1/d */
  double h_tolerance;
  uint64_t seed;
  int max_outer;
  int batch_size;  /* 0 = full batch */
  double grad_clip; /* 0 = off */
  double init_scale;
  tl_optimizer optimizer;
  int latent_dim;  /* DAG-GNN only */
  int hidden;
  int samples;
} tl_train_config;

TL_API tl_train_config tl_train_config_default(tl_model model);

typedef struct tl_outer_record {
  int step;
  double h;
  double alpha;
  double beta;
  double loss;
  double l1;
} tl_outer_record;

/* On divergence returns TL_NUMERICAL and, when `out` is not NULL, still
 * stores the partial result recorded up to the failure. */
TL_API tl_status tl_train(const tl_dataset* x, const tl_train_config* cfg, tl_train_result** out);
TL_API void tl_train_result_free(tl_train_result* r);
TL_API int tl_train_result_diverged(const tl_train_result* r);
TL_API tl_status tl_train_result_a_best(const tl_train_result* r, tl_matrix** out);
TL_API tl_status tl_train_result_a_final(const tl_train_result* r, tl_matrix** out);
TL_API double tl_train_result_loss_best(const tl_train_result* r);
TL_API double tl_train_result_final_h(const tl_train_result* r);
TL_API double tl_train_result_best_h(const tl_train_result* r);
TL_API int tl_train_result_converged(const tl_train_result* r);
TL_API int tl_train_result_inner_steps(const tl_train_result* r);
TL_API int tl_train_result_rejected_steps(const tl_train_result* r);
/* Number of trajectory records; record 0 describes the initial matrix. */
TL_API int tl_train_result_record_count(const tl_train_result* r);
TL_API tl_status tl_train_result_record(const tl_train_result* r, int index, tl_outer_record* out);
TL_API tl_status tl_train_result_save_log(const tl_train_result* r, const char* path);
/* DAG-GNN results only: the best model's parameters. */
TL_API tl_status tl_train_result_save_checkpoint(const tl_train_result* r, const char* path);
TL_API tl_status tl_checkpoint_load_adjacency(const char* path, tl_matrix** out);

/* ---- post-processing --------------------------------------------------- */

typedef enum tl_weight_mode { TL_WEIGHT_ABS = 0, TL_WEIGHT_SQUARE = 1 } tl_weight_mode;

typedef struct tl_tear_config {
  double omega;     /* entries with |A_ij| < omega are dropped first */
  int max_len;      /* cycle length cap, 0 = d */
  int max_count;    /* cycles per round */
  tl_weight_mode weight_mode;
  int64_t node_budget;
} tl_tear_config;

typedef struct tl_torn_stream {
  int source;
  int target;
  double weight;
  int round;
} tl_torn_stream;

typedef struct tl_round_stats {
  int cycles;
  int enumeration_truncated;
  int streams;
  int torn;
  double cost;
  int optimal;
  int64_t explored_nodes;
} tl_round_stats;

TL_API tl_tear_config tl_tear_config_default(void);
/* Drops |A_ij| < omega and Forbidden entries, then sets absent Obligatory
 * entries to max|A|. `prior` may be NULL. */
TL_API tl_status tl_preprocess(const tl_matrix* a, const tl_prior* prior, double omega, tl_matrix** out);
/* Preprocesses with cfg->omega and the prior, then tears until acyclic. */
TL_API tl_status tl_tear(const tl_matrix* a, const tl_prior* prior, const tl_tear_config* cfg, tl_tear_report** out);
/* Zeroes entries below omega, then raises a threshold until acyclic. */
TL_API tl_status tl_truncate(const tl_matrix* a, double omega, tl_tear_report** out);
TL_API void tl_tear_report_free(tl_tear_report* r);
TL_API tl_status tl_tear_report_a_final(const tl_tear_report* r, tl_matrix** out);
TL_API int tl_tear_report_torn_count(const tl_tear_report* r);
TL_API tl_status tl_tear_report_torn(const tl_tear_report* r, int index, tl_torn_stream* out);
TL_API int tl_tear_report_rounds(const tl_tear_report* r);
TL_API tl_status tl_tear_report_round(const tl_tear_report* r, int index, tl_round_stats* out);
TL_API double tl_tear_report_total_weight(const tl_tear_report* r);
TL_API double tl_tear_report_threshold(const tl_tear_report* r);
TL_API int tl_tear_report_optimal(const tl_tear_report* r);
TL_API tl_status tl_tear_report_save_json(const tl_tear_report* r, const char* path);

/* ---- evaluation -------------------------------------------------------- */

typedef struct tl_confusion {
  int tp;   /* correctly oriented edges */
  int r;    /* reversed */
  int fp;   /* predicted pairs absent from the true skeleton */
  int e;    /* extra skeleton pairs */
  int m;    /* missing skeleton pairs */
  int tee;  /* predicted edges */
  int t;    /* true edges */
  int f;    /* unordered non-edges of the true skeleton */
} tl_confusion;

typedef struct tl_structure_scores {
  tl_confusion confusion;
  double fdr;
  double tpr;
  double fpr;
  int shd;
} tl_structure_scores;

TL_API tl_status tl_score_structure(const tl_matrix* estimated, const tl_matrix* truth, tl_structure_scores* out);
/* Higher is better. Both need an acyclic support. */
TL_API tl_status tl_gaussian_bic(const tl_dataset* x, const tl_matrix* dag, double* out);
TL_API tl_status tl_bge_score(const tl_dataset* x, const tl_matrix* dag, double* out);
/* Writes a scores file. `truth` and `data` may each be NULL but not both;
 * structure metrics need `truth`, BGe/BIC need `data`. */
TL_API tl_status tl_evaluate_save_json(const tl_matrix* estimated, const tl_matrix* truth, const tl_dataset* data,
                                       const char* path);

#ifdef __cplusplus
}
#endif

#endif
