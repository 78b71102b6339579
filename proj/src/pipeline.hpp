#pragma once

#include <string>

#include "kv_config.hpp"

namespace dmsrec {

// Stage exit codes, also used by the C API and the CLI.
enum StatusCode : int {
  kOk = 0,
  kConfigError = 2,
  kLineageError = 3,
  kRuntimeError = 4,
};

// Runs one pipeline stage (or "all"). Every stage writes its outputs plus a
// manifest (written last, atomically) into <global.out>/<stage>/. Inputs
// covered by an upstream manifest are fingerprint-checked first; a rerun
// whose inputs and config are unchanged is skipped as up-to-date.
int run_stage(const std::string& stage, Config& cfg, bool force, std::string* status);

}  // namespace dmsrec
