// Command-line front end: gldual <solve|verify-t1|verify-t2|conjugates|sweep>.
//
// Exit codes: 0 success, 1 config/IO error (no report written),
// 2 an asserted conclusion failed.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gldual/harness.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool timings = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "flat key = value config file")->required();
  sub->add_option("--seed", c.seed, "overrides the config seed");
  sub->add_option("--out", c.out, "report path (default: $GLDUAL_OUT_DIR/<command>.<ext>, else stdout)");
  sub->add_flag("--timings", c.timings, "append a timings record to the report");
}

// Empty result means stdout.
std::string output_path(const Common& c, const std::string& command, const std::string& ext) {
  if (!c.out.empty()) return c.out;
  if (const char* dir = std::getenv("GLDUAL_OUT_DIR"); dir && *dir)
    return (std::filesystem::path(dir) / (command + ext)).string();
  return {};
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw gldual::ConfigError("cannot write " + path);
  out << text;
}

gldual::RunConfig config_of(const Common& c) {
  gldual::RunConfig cfg = gldual::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Duality checks for scalar Ginzburg-Landau double-well problems"};
  app.require_subcommand(1);

  Common solve_o, t1_o, t2_o, conj_o, sweep_o;
  auto* solve = app.add_subcommand("solve", "Newton solve for a primal critical point");
  add_common(solve, solve_o);
  std::string field_out;
  solve->add_option("--field-out", field_out, "where to write u0 (default: <out>.field when --out is set)");
  auto* t1 = app.add_subcommand("verify-t1", "verify the dual principle without source term");
  add_common(t1, t1_o);
  auto* t2 = app.add_subcommand("verify-t2", "verify the primal-dual principle with source term");
  add_common(t2, t2_o);
  auto* conj = app.add_subcommand("conjugates", "check the closed-form conjugates and their composition");
  add_common(conj, conj_o);
  auto* sweep = app.add_subcommand("sweep", "CSV of hypothesis margins and Hessian surrogates across epsilon");
  add_common(sweep, sweep_o);
  std::string eps_override;
  sweep->add_option("--eps", eps_override, "comma-separated epsilons, overrides eps_list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*solve) {
      const auto cfg = config_of(solve_o);
      const gldual::SolveRun run = gldual::run_solve(cfg);
      const std::string path = output_path(solve_o, "solve", ".jsonl");
      std::string fpath = field_out;
      if (fpath.empty() && !path.empty()) fpath = path + ".field";
      if (!fpath.empty()) gldual::save_field(run.u0, fpath);
      emit(path, run.report.to_jsonl(solve_o.timings));
      return gldual::exit_code(run.report);
    }
    if (*sweep) {
      auto cfg = config_of(sweep_o);
      if (sweep->count("--eps")) cfg.eps_list = gldual::parse_config("eps_list = " + eps_override).eps_list;
      const gldual::SweepTable table = gldual::run_sweep(cfg, cfg.eps_list);
      emit(output_path(sweep_o, "sweep", ".csv"), table.csv);
      return table.failed_rows ? 2 : 0;
    }
    const Common& o = *t1 ? t1_o : *t2 ? t2_o : conj_o;
    const std::string command = *t1 ? "verify-t1" : *t2 ? "verify-t2" : "conjugates";
    const auto cfg = config_of(o);
    const gldual::VerificationReport r = *t1   ? gldual::run_verify_t1(cfg)
                                         : *t2 ? gldual::run_verify_t2(cfg)
                                               : gldual::run_conjugates(cfg);
    emit(output_path(o, command, ".jsonl"), r.to_jsonl(o.timings));
    return gldual::exit_code(r);
  } catch (const std::exception& e) {
    std::cerr << "gldual: error: " << e.what() << "\n";
    return 1;
  }
}
