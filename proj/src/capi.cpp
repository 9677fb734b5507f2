#include "ndharm/ndharm.h"

#include <cstring>
#include <sstream>
#include <string>

#include "ndharm/error.hpp"
#include "ndharm/experiment.hpp"

struct ndh_experiment {
  ndharm::ExperimentConfig config;
  ndharm::RunOptions options;
};

struct ndh_result {
  ndharm::ExperimentConfig config;
  ndharm::ExperimentResult result;
  std::string json;
};

namespace {

thread_local std::string last_error;

ndh_status status_of(ndharm::ErrorCode code) {
  switch (code) {
    case ndharm::ErrorCode::invalid_argument: return NDH_ERR_INVALID_ARGUMENT;
    case ndharm::ErrorCode::config: return NDH_ERR_CONFIG;
    case ndharm::ErrorCode::numeric: return NDH_ERR_NUMERIC;
    case ndharm::ErrorCode::chart: return NDH_ERR_CHART;
    case ndharm::ErrorCode::io: return NDH_ERR_IO;
    case ndharm::ErrorCode::not_converged: return NDH_ERR_NOT_CONVERGED;
  }
  return NDH_ERR_INTERNAL;
}

template <class F>
ndh_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const ndharm::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return NDH_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return NDH_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return NDH_ERR_INTERNAL;
  }
}

ndh_status missing(const char* what) {
  last_error = std::string(what) + " is NULL";
  return NDH_ERR_INVALID_ARGUMENT;
}

ndh_verdict to_c(ndharm::VerdictKind kind) {
  switch (kind) {
    case ndharm::VerdictKind::converged: return NDH_VERDICT_CONVERGED;
    case ndharm::VerdictKind::circling: return NDH_VERDICT_CIRCLING;
    case ndharm::VerdictKind::blowup: return NDH_VERDICT_BLOWUP;
    case ndharm::VerdictKind::chart_exit: return NDH_VERDICT_CHART_EXIT;
    case ndharm::VerdictKind::budget: return NDH_VERDICT_BUDGET;
  }
  return NDH_VERDICT_BUDGET;
}

// Streams whole lines into a sink.
void emit_lines(const std::string& text, ndh_line_sink sink, void* user) {
  if (sink == nullptr) return;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) sink(line.c_str(), user);
}

ndh_status make_experiment(ndharm::ExperimentConfig cfg, ndh_experiment** out) {
  *out = new ndh_experiment{std::move(cfg), {}};
  return NDH_OK;
}

}  // namespace

extern "C" {

const char* ndh_last_error(void) { return last_error.c_str(); }

const char* ndh_status_string(ndh_status status) {
  switch (status) {
    case NDH_OK: return "ok";
    case NDH_ERR_INVALID_ARGUMENT: return "invalid argument";
    case NDH_ERR_CONFIG: return "config error";
    case NDH_ERR_NUMERIC: return "numeric error";
    case NDH_ERR_CHART: return "chart exit";
    case NDH_ERR_IO: return "i/o error";
    case NDH_ERR_NOT_CONVERGED: return "not converged";
    case NDH_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case NDH_ERR_NOT_FOUND: return "not found";
    case NDH_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* ndh_version(void) { return "0.1.0"; }

ndh_status ndh_experiment_from_file(const char* path, ndh_experiment** out) {
  if (path == nullptr) return missing("path");
  if (out == nullptr) return missing("out");
  *out = nullptr;
  return guarded([&] { return make_experiment(ndharm::load_config(path), out); });
}

ndh_status ndh_experiment_from_text(const char* text, ndh_experiment** out) {
  if (text == nullptr) return missing("text");
  if (out == nullptr) return missing("out");
  *out = nullptr;
  return guarded([&] { return make_experiment(ndharm::parse_config_text(text), out); });
}

ndh_status ndh_experiment_from_scenario(const char* name, ndh_experiment** out) {
  if (name == nullptr) return missing("name");
  if (out == nullptr) return missing("out");
  *out = nullptr;
  return guarded([&] {
    for (const auto& s : ndharm::scenarios())
      if (s.name == name) return make_experiment(ndharm::parse_config_text(s.config), out);
    last_error = std::string("unknown scenario '") + name + "'";
    return NDH_ERR_NOT_FOUND;
  });
}

ndh_status ndh_experiment_set_output(ndh_experiment* exp, const char* dir) {
  if (exp == nullptr) return missing("experiment");
  if (dir == nullptr || *dir == '\0') {
    exp->options.write_artifacts = false;
    exp->options.output_dir.clear();
  } else {
    exp->options.write_artifacts = true;
    exp->options.output_dir = dir;
  }
  return NDH_OK;
}

ndh_status ndh_experiment_name(const ndh_experiment* exp, const char** name) {
  if (exp == nullptr) return missing("experiment");
  if (name == nullptr) return missing("name");
  *name = exp->config.name.c_str();
  return NDH_OK;
}

void ndh_experiment_free(ndh_experiment* exp) { delete exp; }

ndh_status ndh_experiment_run(const ndh_experiment* exp, ndh_result** out) {
  if (exp == nullptr) return missing("experiment");
  if (out == nullptr) return missing("out");
  *out = nullptr;
  return guarded([&] {
    auto res = ndharm::run_experiment(exp->config, exp->options);
    auto json = ndharm::verdict_json(exp->config, res);
    *out = new ndh_result{exp->config, std::move(res), std::move(json)};
    return NDH_OK;
  });
}

void ndh_result_free(ndh_result* res) { delete res; }

ndh_status ndh_result_verdict(const ndh_result* res, ndh_verdict* verdict) {
  if (res == nullptr) return missing("result");
  if (verdict == nullptr) return missing("verdict");
  *verdict = to_c(res->result.run.verdict.kind);
  return NDH_OK;
}

ndh_status ndh_result_evidence(const ndh_result* res, const char* key, double* value) {
  if (res == nullptr) return missing("result");
  if (key == nullptr) return missing("key");
  if (value == nullptr) return missing("value");
  return guarded([&] {
    auto values = ndharm::golden_values(res->result);
    values["drift_r2"] = res->result.run.verdict.drift_r2;
    values["homotopy_r2"] = res->result.run.verdict.homotopy_r2;
    values["wall_seconds"] = res->result.run.verdict.wall_seconds;
    const auto it = values.find(key);
    if (it == values.end()) {
      last_error = std::string("no evidence named '") + key + "'";
      return NDH_ERR_NOT_FOUND;
    }
    *value = it->second;
    return NDH_OK;
  });
}

ndh_status ndh_result_json(const ndh_result* res, char* buf, size_t cap, size_t* needed) {
  if (res == nullptr) return missing("result");
  const size_t size = res->json.size() + 1;
  if (needed != nullptr) *needed = size;
  if (cap < size || buf == nullptr) {
    last_error = "buffer too small for verdict json";
    return NDH_ERR_BUFFER_TOO_SMALL;
  }
  std::memcpy(buf, res->json.c_str(), size);
  return NDH_OK;
}

const char* ndh_result_output_dir(const ndh_result* res) {
  return res == nullptr ? "" : res->result.output_dir.c_str();
}

int ndh_verdict_exit_code(ndh_verdict verdict) {
  switch (verdict) {
    case NDH_VERDICT_CONVERGED: return ndharm::exit_code(ndharm::VerdictKind::converged);
    case NDH_VERDICT_CIRCLING: return ndharm::exit_code(ndharm::VerdictKind::circling);
    case NDH_VERDICT_BLOWUP: return ndharm::exit_code(ndharm::VerdictKind::blowup);
    case NDH_VERDICT_CHART_EXIT: return ndharm::exit_code(ndharm::VerdictKind::chart_exit);
    case NDH_VERDICT_BUDGET: return ndharm::exit_code(ndharm::VerdictKind::budget);
  }
  return 1;
}

const char* ndh_verdict_string(ndh_verdict verdict) {
  switch (verdict) {
    case NDH_VERDICT_CONVERGED: return "converged";
    case NDH_VERDICT_CIRCLING: return "circling";
    case NDH_VERDICT_BLOWUP: return "blowup";
    case NDH_VERDICT_CHART_EXIT: return "chart_exit";
    case NDH_VERDICT_BUDGET: return "budget";
  }
  return "unknown";
}

size_t ndh_scenario_count(void) { return ndharm::scenarios().size(); }

ndh_status ndh_scenario_info(size_t index, const char** name, const char** description, const char** claim,
                             ndh_verdict* expected) {
  const auto& list = ndharm::scenarios();
  if (index >= list.size()) {
    last_error = "scenario index out of range";
    return NDH_ERR_NOT_FOUND;
  }
  const auto& s = list[index];
  if (name) *name = s.name.c_str();
  if (description) *description = s.description.c_str();
  if (claim) *claim = s.claim.c_str();
  if (expected) *expected = to_c(s.expected);
  return NDH_OK;
}

ndh_status ndh_verify_goldens(const char* filter, const char* golden_dir, ndh_line_sink sink, void* user,
                              int* exit_code) {
  if (exit_code == nullptr) return missing("exit_code");
  return guarded([&] {
    std::ostringstream report;
    *exit_code = ndharm::verify_goldens(filter ? filter : "", golden_dir ? golden_dir : ndharm::default_golden_dir(),
                                        report);
    emit_lines(report.str(), sink, user);
    return NDH_OK;
  });
}

ndh_status ndh_bless_goldens(const char* filter, const char* golden_dir, ndh_line_sink sink, void* user) {
  return guarded([&] {
    std::ostringstream report;
    const int code = ndharm::bless_goldens(filter ? filter : "",
                                           golden_dir ? golden_dir : ndharm::default_golden_dir(), report);
    emit_lines(report.str(), sink, user);
    if (code != 0) {
      last_error = "no scenario matched";
      return NDH_ERR_NOT_FOUND;
    }
    return NDH_OK;
  });
}

ndh_status ndh_dump_operator(const ndh_experiment* exp, ndh_line_sink sink, void* user) {
  if (exp == nullptr) return missing("experiment");
  return guarded([&] {
    std::ostringstream os;
    ndharm::dump_operator(exp->config, os);
    emit_lines(os.str(), sink, user);
    return NDH_OK;
  });
}

}  // extern "C"
