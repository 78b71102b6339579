/* C interface to the dmsrec session-recommendation pipeline.
 *
 * A dmsrec_run is an opaque handle bundling configuration and error state.
 * Typical use:
 *
 *   dmsrec_run *run = dmsrec_run_new();
 *   dmsrec_run_load_config(run, "run.conf");        // optional
 *   dmsrec_run_set(run, "global.out", "runs/demo"); // flag-level overrides
 *   int rc = dmsrec_run_stage(run, "all");
 *   if (rc != DMSREC_OK) fprintf(stderr, "%s\n", dmsrec_run_last_error(run));
 *   dmsrec_run_free(run);
 *
 * All functions are NULL-safe on the handle and return DMSREC_ERR_CONFIG
 * for a NULL handle. Strings returned by the library stay valid until the
 * next call on the same handle or until the handle is freed.
 */
#ifndef DMSREC_H
#define DMSREC_H

#ifdef __cplusplus
extern "C" {
#endif

enum dmsrec_status {
  DMSREC_OK = 0,
  DMSREC_ERR_CONFIG = 2,  /* bad configuration or unknown stage */
  DMSREC_ERR_LINEAGE = 3, /* input fingerprint does not match its manifest */
  DMSREC_ERR_RUNTIME = 4  /* stage execution failed */
};

typedef struct dmsrec_run dmsrec_run;

const char *dmsrec_version(void);

dmsrec_run *dmsrec_run_new(void);
void dmsrec_run_free(dmsrec_run *run);

/* Layers a sectioned key=value config file under any flag overrides. */
int dmsrec_run_load_config(dmsrec_run *run, const char *path);

/* Sets one "section.key" value; overrides both file and defaults. */
int dmsrec_run_set(dmsrec_run *run, const char *key, const char *value);

/* Nonzero skips lineage refusals and breaks stale stage locks. */
int dmsrec_run_set_force(dmsrec_run *run, int force);

/* Runs a stage: preprocess | pretrain | candidates | mine | encode | train |
 * eval | ablate | sweep | fixture | all. Returns a dmsrec_status value. */
int dmsrec_run_stage(dmsrec_run *run, const char *stage);

/* Human-readable status of the last dmsrec_run_stage call ("ok: ...",
 * "up-to-date", or an error description). */
const char *dmsrec_run_last_status(const dmsrec_run *run);

/* Error text of the last failing call, or "" if it succeeded. */
const char *dmsrec_run_last_error(const dmsrec_run *run);

#ifdef __cplusplus
}
#endif

#endif /* DMSREC_H */
