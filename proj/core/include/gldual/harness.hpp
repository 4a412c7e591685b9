#pragma once

// Config-driven pipelines behind the command-line tool: solve for a critical
// point, build the dual point, check hypotheses, verify conclusions, report.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gldual/errors.hpp"
#include "gldual/primal.hpp"
#include "gldual/verify.hpp"

namespace gldual {

/// Malformed config, unreadable file or an inconsistent instance. Exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Flat `key = value` configuration. Lines starting with '#' are comments.
///
///   theorem          1 | 2
///   dim              1 | 2
///   extent           L or Lx,Ly
///   nodes            n or nx,ny
///   boundary         neumann | dirichlet (default: neumann for 1, dirichlet for 2)
///   gamma alpha beta epsilon
///   f                zero | const:c | manufactured | file:path
///   init             const:c | cosine:amp[:mode] | sine:amp[:mode] | file:path
///   seed             unsigned integer
///   ball_samples penalty_samples conjugate_samples
///   radius           local-max ball radius (default 1e-3 (1 + |d|))
///   tol max_iter     Newton controls
///   eps_list         comma-separated epsilons for sweeps
struct RunConfig {
  int theorem = 1;
  int dim = 1;
  std::array<double, 2> extent{1.0, 1.0};
  std::array<int, 2> nodes{9, 1};
  std::optional<Boundary> boundary;
  double gamma = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
  double epsilon = 1e-3;
  std::string f = "zero";
  std::string init = "const:0";
  std::uint64_t seed = 1;
  int ball_samples = 200;
  int penalty_samples = 500;
  int conjugate_samples = 50;
  std::optional<double> radius;
  double tol = 1e-10;
  int max_iter = 100;
  std::vector<double> eps_list;
  /// Directory that relative `file:` paths resolve against.
  std::string base_dir = ".";
};

RunConfig parse_config(const std::string& text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

GridSpec make_grid(const RunConfig& c);
GLParams make_params(const RunConfig& c, const GridSpec& g);
ScalarField make_init(const RunConfig& c, const GridSpec& g);

/// Field file: a `# gldual-field v1` header, the grid spec, then `values`
/// followed by one nodal value per line. Round-trips exactly.
std::string format_field(const ScalarField& f);
ScalarField parse_field(const std::string& text);
ScalarField load_field(const std::string& path);
void save_field(const ScalarField& f, const std::string& path);

struct SolveRun {
  VerificationReport report;
  ScalarField u0;
};

SolveRun run_solve(const RunConfig& c);
VerificationReport run_verify_t1(const RunConfig& c);
VerificationReport run_verify_t2(const RunConfig& c);
VerificationReport run_conjugates(const RunConfig& c);

struct SweepTable {
  std::string csv;
  /// Rows that raised or failed an asserted conclusion.
  int failed_rows = 0;
};

/// One CSV row per epsilon, computed concurrently and emitted in list order.
/// ConfigError unless the list is strictly decreasing inside (0, 1).
SweepTable run_sweep(const RunConfig& c, const std::vector<double>& eps_list);

/// 0 when every asserted conclusion passed, 2 otherwise.
int exit_code(const VerificationReport& r);

}  // namespace gldual
