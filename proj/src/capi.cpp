#include "dmsrec.h"

#include <string>

#include "kv_config.hpp"
#include "pipeline.hpp"
#include "version.hpp"

struct dmsrec_run {
  dmsrec::Config config;
  bool force = false;
  std::string last_status;
  std::string last_error;
};

extern "C" {

const char *dmsrec_version(void) { return dmsrec::kVersion; }

dmsrec_run *dmsrec_run_new(void) { return new dmsrec_run(); }

void dmsrec_run_free(dmsrec_run *run) { delete run; }

int dmsrec_run_load_config(dmsrec_run *run, const char *path) {
  if (!run || !path) return DMSREC_ERR_CONFIG;
  try {
    run->config.load_file(path);
    run->last_error.clear();
    return DMSREC_OK;
  } catch (const std::exception &ex) {
    run->last_error = ex.what();
    return DMSREC_ERR_CONFIG;
  }
}

int dmsrec_run_set(dmsrec_run *run, const char *key, const char *value) {
  if (!run || !key || !value) return DMSREC_ERR_CONFIG;
  run->config.set(key, value);
  return DMSREC_OK;
}

int dmsrec_run_set_force(dmsrec_run *run, int force) {
  if (!run) return DMSREC_ERR_CONFIG;
  run->force = force != 0;
  return DMSREC_OK;
}

int dmsrec_run_stage(dmsrec_run *run, const char *stage) {
  if (!run || !stage) return DMSREC_ERR_CONFIG;
  int rc = dmsrec::run_stage(stage, run->config, run->force, &run->last_status);
  run->last_error = (rc == DMSREC_OK) ? "" : run->last_status;
  return rc;
}

const char *dmsrec_run_last_status(const dmsrec_run *run) {
  return run ? run->last_status.c_str() : "";
}

const char *dmsrec_run_last_error(const dmsrec_run *run) {
  return run ? run->last_error.c_str() : "";
}

}  // extern "C"
