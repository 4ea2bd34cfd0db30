/* C API for the fairfl federated-learning simulator.
 *
 * All entry points return a status code and report details through the
 * caller-supplied error buffer. Handles are opaque and must be released
 * with their matching _free function.
 */
#ifndef FAIRFL_FAIRFL_H
#define FAIRFL_FAIRFL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define FAIRFL_OK 0
#define FAIRFL_ERR_VALIDATION 1
#define FAIRFL_ERR_RUNTIME 2

typedef struct fairfl_config fairfl_config;

const char* fairfl_version(void);

/* Parses an experiment config document. On failure *out is NULL. */
int fairfl_config_load(const char* path, fairfl_config** out, char* err,
                       size_t err_len);
int fairfl_config_parse(const char* text, fairfl_config** out, char* err,
                        size_t err_len);
void fairfl_config_free(fairfl_config* cfg);

/* Applies a "section.key=value" override, e.g. "train.eta" / "0.9". */
int fairfl_config_set(fairfl_config* cfg, const char* key, const char* value,
                      char* err, size_t err_len);

/* Generates the configured synthetic dataset and writes it in the binary
 * embedding format. */
int fairfl_gen_synth(const fairfl_config* cfg, const char* out_path, char* err,
                     size_t err_len);

/* Writes per-client train/test shards of the configured partition. */
int fairfl_partition(const fairfl_config* cfg, const char* out_dir, char* err,
                     size_t err_len);

/* Runs a single training cell (ignores sweep lists); artifacts go to the
 * config's output dir. A model checkpoint is always written. */
int fairfl_train(const fairfl_config* cfg, char* err, size_t err_len);

/* Runs the configured sweep; artifacts and tradeoff.csv go to the config's
 * output dir. Cells that fail are recorded in the manifest; the call fails
 * only if every cell fails. */
int fairfl_sweep(const fairfl_config* cfg, char* err, size_t err_len);

/* Evaluates a checkpoint against the config's test shards. *report_json is
 * heap-allocated; release it with fairfl_string_free. */
int fairfl_evaluate(const fairfl_config* cfg, const char* checkpoint_path,
                    char** report_json, char* err, size_t err_len);

/* Solves the discrete fairness-constrained oracle problem for an instance
 * JSON document ({"x_size": n, "p": [...]}, flat (x,s,y) order). */
int fairfl_oracle_solve(const char* instance_path, double epsilon, int grid_n,
                        char** report_json, char* err, size_t err_len);

void fairfl_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* FAIRFL_FAIRFL_H */
