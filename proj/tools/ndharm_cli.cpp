// Command-line front end over the C API.
#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "ndharm/ndharm.h"

namespace {

constexpr int kUsage = 64;
constexpr int kSoftware = 70;
constexpr int kIo = 74;

int report_failure(ndh_status st) {
  std::cerr << "ndharm: " << ndh_status_string(st) << ": " << ndh_last_error() << '\n';
  if (st == NDH_ERR_CONFIG || st == NDH_ERR_INVALID_ARGUMENT || st == NDH_ERR_NOT_FOUND) return kUsage;
  if (st == NDH_ERR_IO) return kIo;
  return kSoftware;
}

void to_stream(const char* line, void* user) { *static_cast<std::ostream*>(user) << line << '\n'; }

// A config path when the file exists, else a scenario name.
ndh_status open_experiment(const std::string& what, ndh_experiment** exp) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(what, ec)) return ndh_experiment_from_file(what.c_str(), exp);
  return ndh_experiment_from_scenario(what.c_str(), exp);
}

struct ExperimentHandle {
  ndh_experiment* p = nullptr;
  ~ExperimentHandle() { ndh_experiment_free(p); }
};
struct ResultHandle {
  ndh_result* p = nullptr;
  ~ResultHandle() { ndh_result_free(p); }
};

int cmd_run(const std::string& what, const std::string& output, bool no_artifacts, bool quiet) {
  ExperimentHandle exp;
  if (auto st = open_experiment(what, &exp.p); st != NDH_OK) return report_failure(st);
  if (no_artifacts) ndh_experiment_set_output(exp.p, nullptr);
  else if (!output.empty()) ndh_experiment_set_output(exp.p, output.c_str());
  ResultHandle res;
  if (auto st = ndh_experiment_run(exp.p, &res.p); st != NDH_OK) return report_failure(st);
  ndh_verdict v{};
  ndh_result_verdict(res.p, &v);
  if (!quiet) {
    size_t need = 0;
    ndh_result_json(res.p, nullptr, 0, &need);
    std::vector<char> buf(need);
    if (ndh_result_json(res.p, buf.data(), buf.size(), &need) == NDH_OK) std::cout << buf.data() << '\n';
  }
  const char* dir = ndh_result_output_dir(res.p);
  if (*dir != '\0') std::cerr << "artifacts: " << dir << '\n';
  std::cerr << "verdict: " << ndh_verdict_string(v) << '\n';
  return ndh_verdict_exit_code(v);
}

int cmd_scenarios() {
  const size_t n = ndh_scenario_count();
  for (size_t i = 0; i < n; ++i) {
    const char *name = nullptr, *desc = nullptr, *claim = nullptr;
    ndh_verdict expected{};
    ndh_scenario_info(i, &name, &desc, &claim, &expected);
    std::cout << name << "  [expects " << ndh_verdict_string(expected) << "]\n"
              << "    " << desc << "\n"
              << "    claim: " << claim << "\n";
  }
  return 0;
}

int cmd_verify(const std::string& filter, const std::string& goldens, bool bless) {
  const char* dir = goldens.empty() ? nullptr : goldens.c_str();
  if (bless) {
    const auto st = ndh_bless_goldens(filter.c_str(), dir, to_stream, &std::cout);
    if (st == NDH_ERR_NOT_FOUND) return 65;
    return st == NDH_OK ? 0 : report_failure(st);
  }
  int code = 0;
  if (auto st = ndh_verify_goldens(filter.c_str(), dir, to_stream, &std::cout, &code); st != NDH_OK)
    return report_failure(st);
  return code;
}

int cmd_dump(const std::string& what, const std::string& out_path) {
  ExperimentHandle exp;
  if (auto st = open_experiment(what, &exp.p); st != NDH_OK) return report_failure(st);
  if (out_path.empty() || out_path == "-") {
    const auto st = ndh_dump_operator(exp.p, to_stream, &std::cout);
    return st == NDH_OK ? 0 : report_failure(st);
  }
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "ndharm: cannot write " << out_path << '\n';
    return kIo;
  }
  const auto st = ndh_dump_operator(exp.p, to_stream, &out);
  return st == NDH_OK ? 0 : report_failure(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ndharm: non-divergence harmonic map flows on periodic grids"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ndh_version()));

  std::string what, output, filter, goldens, dump_out;
  bool no_artifacts = false, quiet = false, bless = false;

  auto* run = app.add_subcommand("run", "run a config file or a named scenario");
  run->add_option("config", what, "config path or scenario name")->required();
  run->add_option("-o,--output", output, "artifact directory");
  run->add_flag("--no-artifacts", no_artifacts, "skip writing artifacts");
  run->add_flag("-q,--quiet", quiet, "do not print the verdict json");

  app.add_subcommand("scenarios", "list the scenario catalog");

  auto* verify = app.add_subcommand("verify", "rerun scenarios and compare with golden records");
  verify->add_option("filter", filter, "substring of scenario names");
  verify->add_option("--goldens", goldens, "golden directory");
  verify->add_flag("--bless", bless, "rewrite the golden records instead of comparing");

  auto* dump = app.add_subcommand("dump-operator", "write the sparse scalar operator as row col value lines");
  dump->add_option("config", what, "config path or scenario name")->required();
  dump->add_option("-o,--output", dump_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  if (*run) return cmd_run(what, output, no_artifacts, quiet);
  if (app.got_subcommand("scenarios")) return cmd_scenarios();
  if (*verify) return cmd_verify(filter, goldens, bless);
  if (*dump) return cmd_dump(what, dump_out);
  return kUsage;
}
