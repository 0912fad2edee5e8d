#ifndef SITING_H
#define SITING_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SitingStatus {
  SITING_STATUS_OK = 0,
  SITING_STATUS_NULL_POINTER = 1,
  SITING_STATUS_INVALID_UTF8 = 2,
  SITING_STATUS_IO = 3,
  SITING_STATUS_INPUT = 4,
  SITING_STATUS_CONFIG = 5,
  SITING_STATUS_PORTFOLIO = 6,
  SITING_STATUS_INSUFFICIENT = 7,
  SITING_STATUS_OUT_OF_RANGE = 8,
  SITING_STATUS_INTERNAL = 9,
  SITING_STATUS_PANIC = 10,
} SitingStatus;

typedef struct SitingGrid SitingGrid;

typedef struct SitingPortfolio SitingPortfolio;

typedef struct SitingRun SitingRun;

typedef struct SitingScenario SitingScenario;

typedef struct SitingImpact {
  double water_m3;
  double land_m2;
  double energy_mwh;
  double carbon_t;
} SitingImpact;

/**
 * One deployment record. `cell_id` is -1 when the pathway was rejected.
 */
typedef struct SitingRecord {
  uint32_t step;
  /**
   * Index into the pathway list; see [`siting_pathway_name`].
   */
  uint32_t pathway;
  int64_t cell_id;
  double requested;
  double deployed;
  double residual;
  struct SitingImpact impact;
} SitingRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. Valid until the next failing call.
 */
const char *siting_last_error(void);

/**
 * Library version and conversion-factor table hash. Static storage.
 */
const char *siting_version(void);

size_t siting_pathway_count(void);

/**
 * Canonical pathway name for an index, or null when out of range. Static storage.
 */
const char *siting_pathway_name(uint32_t index);

/**
 * Production-stage impact of one pathway at `capacity` (MW or tonne/yr).
 */
enum SitingStatus siting_pathway_impact(const char *pathway,
                                        double capacity,
                                        double capacity_factor,
                                        bool capture_composition,
                                        struct SitingImpact *out);

enum SitingStatus siting_grid_load(const char *path, struct SitingGrid **out);

size_t siting_grid_cell_count(const struct SitingGrid *grid);

void siting_grid_free(struct SitingGrid *grid);

enum SitingStatus siting_portfolio_load(const char *path, struct SitingPortfolio **out);

/**
 * The shipped regional portfolio.
 */
enum SitingStatus siting_portfolio_default(struct SitingPortfolio **out);

void siting_portfolio_free(struct SitingPortfolio *portfolio);

enum SitingStatus siting_scenario_load(const char *path, struct SitingScenario **out);

/**
 * `"baseline"` or `"unconstrained"`.
 */
enum SitingStatus siting_scenario_preset(const char *name, struct SitingScenario **out);

enum SitingStatus siting_scenario_set_seed(struct SitingScenario *scenario, uint64_t seed);

void siting_scenario_free(struct SitingScenario *scenario);

/**
 * Builds a named synthetic input set (`socal-like`, `aw-shortfall`, `shared-cell`).
 * Any of the output pointers may be null if that part is not wanted.
 */
enum SitingStatus siting_fixture(const char *preset,
                                 uint64_t seed,
                                 struct SitingGrid **out_grid,
                                 struct SitingPortfolio **out_portfolio,
                                 struct SitingScenario **out_scenario);

/**
 * Screens and sites the portfolio on a copy of the grid. Inputs are not modified.
 */
enum SitingStatus siting_run(const struct SitingGrid *grid,
                             const struct SitingPortfolio *portfolio,
                             const struct SitingScenario *scenario,
                             struct SitingRun **out);

size_t siting_run_record_count(const struct SitingRun *run);

enum SitingStatus siting_run_record(const struct SitingRun *run,
                                    size_t index,
                                    struct SitingRecord *out);

/**
 * Copies the NUL-terminated decision trace of a record into `buf`.
 * `*len` receives the full length including the terminator; when `cap` is
 * too small nothing is copied and `OutOfRange` is returned.
 */
enum SitingStatus siting_run_record_trace(const struct SitingRun *run,
                                          size_t index,
                                          char *buf,
                                          size_t cap,
                                          size_t *len);

/**
 * Writes `report.json`, `deployments.csv`, `impacts_grid.csv` and `ledger.csv`.
 */
enum SitingStatus siting_run_write(const struct SitingRun *run, const char *out_dir);

void siting_run_free(struct SitingRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SITING_H */
