#include "gldual/harness.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "gldual/conjugates.hpp"
#include "gldual/dual_t1.hpp"
#include "gldual/primal_dual_t2.hpp"
#include "internal.hpp"

namespace gldual {

namespace {

// ---------------------------------------------------------------------------
// Parsing helpers

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ConfigError("bad number for " + what + ": '" + s + "'");
  return v;
}

long long to_int(const std::string& s, const std::string& what) {
  long long v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end)
    throw ConfigError("bad integer for " + what + ": '" + s + "'");
  return v;
}

int to_count(const std::string& s, const std::string& what) {
  const long long v = to_int(s, what);
  if (v < 1 || v > 10'000'000) throw ConfigError(what + " must be a positive count");
  return static_cast<int>(v);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string resolve(const RunConfig& c, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(c.base_dir) / p).string();
}

// "kind:arg1:arg2" -> {kind, arg1, arg2}
std::vector<std::string> spec_parts(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon != std::string::npos && spec.compare(0, colon, "file") == 0)
    return {"file", spec.substr(colon + 1)};
  return split(spec, ':');
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Report helpers

Check hyp(std::string name, std::string clause, double measured, double threshold, bool ok,
          std::string note = {}) {
  return {std::move(name), std::move(clause), measured, threshold, ok ? Status::Pass : Status::Fail,
          std::move(note)};
}

Check info(std::string name, std::string clause, double measured, std::string note = {}) {
  return {std::move(name), std::move(clause), measured, std::nan(""), Status::Info, std::move(note)};
}

Check bound(std::string name, std::string clause, double measured, double threshold, bool asserted,
            std::string note = {}) {
  return {std::move(name), std::move(clause), measured, threshold,
          bound_status(measured, threshold, asserted), std::move(note)};
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void describe_instance(VerificationReport& r, const RunConfig& c, const GridSpec& g) {
  r.describe("theorem", static_cast<std::int64_t>(c.theorem));
  r.describe("dim", static_cast<std::int64_t>(g.dim));
  r.describe("extent_x", g.extent[0]);
  r.describe("nodes_x", static_cast<std::int64_t>(g.nodes[0]));
  if (g.dim == 2) {
    r.describe("extent_y", g.extent[1]);
    r.describe("nodes_y", static_cast<std::int64_t>(g.nodes[1]));
  }
  r.describe("boundary", std::string(to_string(g.boundary)));
  r.describe("gamma", c.gamma);
  r.describe("alpha", c.alpha);
  r.describe("beta", c.beta);
  r.describe("epsilon", c.epsilon);
  r.describe("f", c.f);
  r.describe("init", c.init);
  r.describe("seed", static_cast<std::int64_t>(c.seed));
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Instance {
  GridSpec grid;
  GLParams params;
  CriticalPoint cp;
  double J = 0.0;
};

Instance prepare(const RunConfig& c, VerificationReport& r, const char* command) {
  r.command = command;
  const GridSpec g = make_grid(c);
  const GLParams p = make_params(c, g);
  describe_instance(r, c, g);
  CriticalPoint cp = solve_critical(p, make_init(c, g), NewtonOptions{c.tol, c.max_iter, 30});
  r.describe("newton_iters", static_cast<std::int64_t>(cp.newton_iters));
  r.describe("newton_status", std::string(to_string(cp.status)));
  const double J = eval_J(p, cp.u0);
  r.describe("J_u0", J);
  r.hypothesis(hyp("critical_point", "u0 is a critical point of the primal energy: |dJ(u0)|_inf <= tol",
                   cp.residual_norm, c.tol, cp.converged()));
  return {g, p, std::move(cp), J};
}

double min_free(const ScalarField& f) { return detail::free_values(f).minCoeff(); }

const char* kGapClause = "primal energy at u0 equals the dual energy at the constructed dual point";
const char* kStatClause = "the constructed dual point is stationary for the dual functional";
const char* kPenClause = "J(u) + 1/2 int K (u - u0)^2 >= J(u0) for sampled u";
const char* kBallClause = "the dual functional has a local maximum at the constructed point (ball samples)";
const char* kHessClause = "largest eigenvalue of the dual Hessian at the constructed point is <= 0";

}  // namespace

// ---------------------------------------------------------------------------
// Config

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, value).second) throw ConfigError("duplicate key '" + key + "'");
  }

  for (const auto& [key, v] : kv) {
    if (key == "theorem") {
      c.theorem = static_cast<int>(to_int(v, key));
      if (c.theorem != 1 && c.theorem != 2) throw ConfigError("theorem must be 1 or 2");
    } else if (key == "dim") {
      c.dim = static_cast<int>(to_int(v, key));
      if (c.dim != 1 && c.dim != 2) throw ConfigError("dim must be 1 or 2");
    } else if (key == "extent") {
      const auto parts = split(v, ',');
      if (parts.empty() || parts.size() > 2) throw ConfigError("extent takes one or two numbers");
      for (size_t i = 0; i < parts.size(); ++i) c.extent[i] = to_double(parts[i], key);
      if (parts.size() == 1) c.extent[1] = c.extent[0];
    } else if (key == "nodes") {
      const auto parts = split(v, ',');
      if (parts.empty() || parts.size() > 2) throw ConfigError("nodes takes one or two integers");
      for (size_t i = 0; i < parts.size(); ++i) c.nodes[i] = to_count(parts[i], key);
      if (parts.size() == 1) c.nodes[1] = c.nodes[0];
    } else if (key == "boundary") {
      if (v == "neumann")
        c.boundary = Boundary::Neumann;
      else if (v == "dirichlet")
        c.boundary = Boundary::Dirichlet;
      else
        throw ConfigError("boundary must be neumann or dirichlet");
    } else if (key == "gamma") {
      c.gamma = to_double(v, key);
    } else if (key == "alpha") {
      c.alpha = to_double(v, key);
    } else if (key == "beta") {
      c.beta = to_double(v, key);
    } else if (key == "epsilon") {
      c.epsilon = to_double(v, key);
    } else if (key == "f") {
      c.f = v;
    } else if (key == "init") {
      c.init = v;
    } else if (key == "seed") {
      const long long s = to_int(v, key);
      if (s < 0) throw ConfigError("seed must be non-negative");
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "ball_samples") {
      c.ball_samples = to_count(v, key);
    } else if (key == "penalty_samples") {
      c.penalty_samples = to_count(v, key);
    } else if (key == "conjugate_samples") {
      c.conjugate_samples = to_count(v, key);
    } else if (key == "radius") {
      c.radius = to_double(v, key);
      if (*c.radius < 0.0) throw ConfigError("radius must be non-negative");
    } else if (key == "tol") {
      c.tol = to_double(v, key);
      if (!(c.tol > 0.0)) throw ConfigError("tol must be positive");
    } else if (key == "max_iter") {
      c.max_iter = static_cast<int>(to_int(v, key));
      if (c.max_iter < 0) throw ConfigError("max_iter must be non-negative");
    } else if (key == "eps_list") {
      c.eps_list.clear();
      if (!v.empty())
        for (const auto& s : split(v, ',')) c.eps_list.push_back(to_double(s, key));
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  if (!(c.gamma > 0 && c.alpha > 0 && c.beta > 0))
    throw ConfigError("gamma, alpha and beta must be positive");
  if (!(c.epsilon > 0 && c.epsilon < 1)) throw ConfigError("epsilon must lie in (0, 1)");
  return c;
}

RunConfig load_config(const std::string& path) {
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return parse_config(read_file(path), dir.empty() ? "." : dir);
}

GridSpec make_grid(const RunConfig& c) {
  const Boundary b = c.boundary.value_or(c.theorem == 2 ? Boundary::Dirichlet : Boundary::Neumann);
  try {
    GridSpec g = c.dim == 1 ? GridSpec::line(c.extent[0], c.nodes[0], b)
                            : GridSpec::rect(c.extent[0], c.extent[1], c.nodes[0], c.nodes[1], b);
    g.validate();
    return g;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

GLParams make_params(const RunConfig& c, const GridSpec& g) {
  const auto parts = spec_parts(c.f);
  std::optional<ScalarField> f;
  if (parts[0] == "zero" && parts.size() == 1) {
    if (g.boundary == Boundary::Dirichlet) f = ScalarField::constant(g, 0.0);
  } else if (parts[0] == "const" && parts.size() == 2) {
    f = ScalarField::constant(g, to_double(parts[1], "f"));
  } else if (parts[0] == "manufactured" && parts.size() == 1) {
    if (g.boundary != Boundary::Dirichlet) throw ConfigError("f=manufactured needs a Dirichlet grid");
    const double lx = g.extent[0], ly = g.extent[1];
    const int dim = g.dim;
    const ScalarField ustar = ScalarField::from_function(g, [=](double x, double y) {
      const double sx = std::sin(std::numbers::pi * x / lx);
      return dim == 2 ? sx * std::sin(std::numbers::pi * y / ly) : sx;
    });
    f = manufactured_source(c.gamma, c.alpha, c.beta, ustar);
  } else if (parts[0] == "file" && parts.size() == 2) {
    f = load_field(resolve(c, parts[1]));
    if (!(f->grid() == g)) throw ConfigError("source field grid does not match the config grid");
  } else {
    throw ConfigError("bad f spec '" + c.f + "'");
  }

  if (c.theorem == 1 && f && f->values().cwiseAbs().maxCoeff() != 0.0)
    throw ConfigError("the dual principle without source needs f = zero");
  if (f && g.boundary == Boundary::Neumann)
    throw ConfigError("a source term needs a Dirichlet grid");

  GLParams p = f ? GLParams::dirichlet(c.gamma, c.alpha, c.beta, c.epsilon, *f)
                 : GLParams::neumann(c.gamma, c.alpha, c.beta, c.epsilon);
  try {
    p.validate(g);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const RegimeMismatch& e) {
    throw ConfigError(e.what());
  }
  return p;
}

ScalarField make_init(const RunConfig& c, const GridSpec& g) {
  const auto parts = spec_parts(c.init);
  const std::string& kind = parts[0];
  if (kind == "const" && parts.size() == 2) return ScalarField::constant(g, to_double(parts[1], "init"));
  if ((kind == "cosine" || kind == "sine") && (parts.size() == 2 || parts.size() == 3)) {
    const double amp = to_double(parts[1], "init");
    const double mode = parts.size() == 3 ? to_double(parts[2], "init mode") : 1.0;
    const bool cosine = kind == "cosine";
    const double lx = g.extent[0], ly = g.extent[1];
    const int dim = g.dim;
    return ScalarField::from_function(g, [=](double x, double y) {
      auto shape = [&](double t, double len) {
        const double a = mode * std::numbers::pi * t / len;
        return cosine ? std::cos(a) : std::sin(a);
      };
      return amp * shape(x, lx) * (dim == 2 ? shape(y, ly) : 1.0);
    });
  }
  if (kind == "file" && parts.size() == 2) {
    ScalarField u = load_field(resolve(c, parts[1]));
    if (!(u.grid() == g)) throw ConfigError("initial field grid does not match the config grid");
    return u;
  }
  throw ConfigError("bad init spec '" + c.init + "'");
}

// ---------------------------------------------------------------------------
// Field files

std::string format_field(const ScalarField& f) {
  const GridSpec& g = f.grid();
  std::string out = "# gldual-field v1\n";
  char buf[64];
  out += "dim " + std::to_string(g.dim) + "\n";
  std::snprintf(buf, sizeof buf, "%.17g", g.extent[0]);
  out += std::string("extent ") + buf;
  if (g.dim == 2) {
    std::snprintf(buf, sizeof buf, "%.17g", g.extent[1]);
    out += std::string(" ") + buf;
  }
  out += "\nnodes " + std::to_string(g.nodes[0]);
  if (g.dim == 2) out += " " + std::to_string(g.nodes[1]);
  out += std::string("\nboundary ") + to_string(g.boundary) + "\nvalues\n";
  for (int i = 0; i < f.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", f[i]);
    out += buf;
  }
  return out;
}

ScalarField parse_field(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "# gldual-field v1")
    throw ConfigError("field file: missing '# gldual-field v1' header");

  auto expect = [&](const std::string& key) {
    if (!std::getline(in, line)) throw ConfigError("field file: missing '" + key + "'");
    auto parts = split(trim(line), ' ');
    if (parts.empty() || parts[0] != key) throw ConfigError("field file: expected '" + key + "'");
    parts.erase(parts.begin());
    return parts;
  };

  const auto dim_parts = expect("dim");
  if (dim_parts.size() != 1) throw ConfigError("field file: bad dim line");
  const int dim = static_cast<int>(to_int(dim_parts[0], "dim"));
  if (dim != 1 && dim != 2) throw ConfigError("field file: dim must be 1 or 2");
  const auto ext = expect("extent");
  const auto nod = expect("nodes");
  const auto bnd = expect("boundary");
  if (ext.size() != static_cast<size_t>(dim) || nod.size() != static_cast<size_t>(dim) || bnd.size() != 1)
    throw ConfigError("field file: grid lines do not match dim");
  Boundary b;
  if (bnd[0] == "neumann")
    b = Boundary::Neumann;
  else if (bnd[0] == "dirichlet")
    b = Boundary::Dirichlet;
  else
    throw ConfigError("field file: bad boundary '" + bnd[0] + "'");

  GridSpec g;
  try {
    g = dim == 1 ? GridSpec::line(to_double(ext[0], "extent"), to_count(nod[0], "nodes"), b)
                 : GridSpec::rect(to_double(ext[0], "extent"), to_double(ext[1], "extent"),
                                  to_count(nod[0], "nodes"), to_count(nod[1], "nodes"), b);
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("field file: ") + e.what());
  }
  if (!std::getline(in, line) || trim(line) != "values") throw ConfigError("field file: expected 'values'");

  Eigen::VectorXd v(g.size());
  int k = 0;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (k >= g.size()) throw ConfigError("field file: too many values");
    v[k++] = to_double(t, "field value");
  }
  if (k != g.size()) throw ConfigError("field file: expected " + std::to_string(g.size()) + " values");
  return ScalarField(g, std::move(v));
}

ScalarField load_field(const std::string& path) { return parse_field(read_file(path)); }

void save_field(const ScalarField& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << format_field(f);
}

// ---------------------------------------------------------------------------
// Pipelines

SolveRun run_solve(const RunConfig& c) {
  Stopwatch sw;
  VerificationReport r;
  Instance in = prepare(c, r, "solve");
  r.conclusion(bound("residual", "Newton reaches |dJ(u0)|_inf <= tol", in.cp.residual_norm, c.tol, true,
                     to_string(in.cp.status)));
  r.conclusion(info("energy_change", "J(u0) - J(initial guess)",
                    in.cp.energy_history.back() - in.cp.energy_history.front()));
  r.conclusion(info("regularizations", "Newton matrices shifted by 1e-10 I",
                    static_cast<double>(in.cp.regularizations)));
  r.timings.emplace_back("total_s", sw.seconds());
  return {std::move(r), in.cp.u0};
}

VerificationReport run_verify_t1(const RunConfig& c) {
  Stopwatch sw;
  VerificationReport r;
  if (c.theorem != 1) throw ConfigError("verify-t1 needs theorem = 1");
  Instance in = prepare(c, r, "verify-t1");
  const GLParams& p = in.params;
  const double eps = p.epsilon;
  const bool converged = in.cp.converged();

  const DualPointT1 d = construct_dual(p, in.cp.u0);
  const HypothesisReportT1 h = check_hypotheses_t1(p, d);
  const double tB = std::pow(eps, 1.0 / 8.0), tOp = std::pow(eps, 1.0 / 4.0);
  const double minK = min_free(K_of(d.v0s, eps));
  r.hypothesis(hyp("in_B", "min K(v0) > eps^{1/8}, K = -2 v0 + eps", minK, tB, h.in_B.ok));
  r.hypothesis(hyp("op1", "lambda_min((L + I)^* (L + I)) > eps^{1/4}", h.op1.margin + tOp, tOp, h.op1.ok));
  r.hypothesis(hyp("op2", "lambda_min(M^* M) > eps^{1/4}, M = gamma Lap diag(2 z/K^2)", h.op2.margin + tOp,
                   tOp, h.op2.ok));
  r.hypothesis(info("op1_nodewise", "min_i (L + I)_ii^2 - eps^{1/4}", h.op1_nodewise));
  r.hypothesis(info("op2_nodewise", "min_i M_ii^2 - eps^{1/4}", h.op2_nodewise));

  const bool defined = converged && minK > 0.0;
  const bool all = defined && h.all_ok();
  const std::string why = !converged ? "critical point not reached" : "K <= 0 at a free node";
  const std::string hyp_note = all ? "" : (defined ? "hypotheses failed" : why);

  double Jt = kNaN, stat = kNaN;
  if (defined) {
    Jt = eval_Jtilde(p, d);
    stat = verify_stationarity_t1(p, d);
  }
  r.conclusion(bound("duality_gap", kGapClause, std::abs(in.J - Jt), 1e-8 * (1.0 + std::abs(in.J)), defined,
                     defined ? "" : why));
  r.conclusion(bound("stationarity", kStatClause, stat, 1e-5, defined, defined ? "" : why));

  if (defined) {
    const PenalizedMinResult pm = verify_penalized_min(p, in.cp.u0, d, c.penalty_samples, c.seed);
    r.conclusion(bound("penalized_min_shortfall", kPenClause, -pm.worst_margin, 1e-9 * (1.0 + std::abs(in.J)),
                       true, std::to_string(pm.samples) + " samples"));

    const double radius = c.radius.value_or(default_radius(d));
    const LocalMaxResult lm = verify_local_max_t1(p, d, radius, c.ball_samples, c.seed);
    Check ball = bound("local_max_ball", kBallClause, lm.worst_increase, 1e-10 * (1.0 + std::abs(Jt)), all,
                       all ? std::to_string(lm.samples) + " samples" : hyp_note);
    if (all && !lm.ok) ball.status = Status::Fail;
    r.conclusion(ball);
    r.conclusion(bound("hessian_lambda_max", kHessClause, lm.hessian_lambda_max.value_or(kNaN), 1e-8,
                       all && lm.hessian_lambda_max.has_value(), all ? "finite-difference Hessian" : hyp_note));

    const J1Blocks b = hessian_blocks_J1(p, d);
    if (b.fd_zz.size() > 0) {
      const char* cl = "exact Hessian block of the penalty term matches finite differences";
      r.conclusion(bound("block_zz", cl, b.err_zz, 1e-4, true));
      r.conclusion(bound("block_zv", cl, b.err_zv, 1e-4, true));
      r.conclusion(bound("block_vv", cl, b.err_vv, 1e-4, true));
      r.conclusion(info("block_zv_reduced", "cross block without the (L + I)^* M / eps part vs finite differences",
                        b.err_zv_reduced));
    }
    if (b.scalar_det) {
      r.conclusion(info("scalar_det", "determinant of the 2x2 penalty Hessian", *b.scalar_det));
      r.conclusion(info("scalar_det_eps32", "determinant times eps^{3/2}", *b.scalar_det * std::pow(eps, 1.5)));
    }
  } else {
    r.conclusion(bound("penalized_min_shortfall", kPenClause, kNaN, kNaN, false, why));
    r.conclusion(bound("local_max_ball", kBallClause, kNaN, kNaN, false, why));
    r.conclusion(bound("hessian_lambda_max", kHessClause, kNaN, 1e-8, false, why));
  }
  r.timings.emplace_back("total_s", sw.seconds());
  return r;
}

VerificationReport run_verify_t2(const RunConfig& c) {
  Stopwatch sw;
  VerificationReport r;
  if (c.theorem != 2) throw ConfigError("verify-t2 needs theorem = 2");
  Instance in = prepare(c, r, "verify-t2");
  const GLParams& p = in.params;
  if (p.regime() != Boundary::Dirichlet) throw ConfigError("verify-t2 needs a Dirichlet grid with a source");
  const double eps = p.epsilon;
  const bool converged = in.cp.converged();

  const DualPointT2 d = construct_dual_t2(p, in.cp.u0);
  const HypothesisReportT2 h = check_hypotheses_t2(p, in.cp.u0);
  const double se = std::sqrt(eps);
  r.hypothesis(hyp("op", "lambda_min(A^2) > sqrt(eps), A = -Lap + (2 v0 - eps) I", h.op.margin + se, se, h.op.ok));
  r.hypothesis(info("op_gamma_margin", "lambda_min(A_gamma^2) - sqrt(eps), A_gamma = -gamma Lap + (2 v0 - eps) I",
                    h.op_gamma_margin));
  r.hypothesis(hyp("sign", "f u0 >= 0 at every free node", h.sign.margin, -1e-14, h.sign.ok));

  const bool all = converged && h.all_ok();
  const std::string why = converged ? "hypotheses failed" : "critical point not reached";

  const double J3 = eval_J3(p, d);
  r.conclusion(bound("duality_gap", kGapClause, std::abs(in.J - J3), 1e-8 * (1.0 + std::abs(in.J)), converged,
                     converged ? "" : why));
  r.conclusion(bound("stationarity", kStatClause, verify_stationarity_t2(p, d), 1e-5, converged,
                     converged ? "" : why));

  {
    // |u0 - u1|_inf against |dJ(u0)|_inf / eps; both are the same algebraic
    // quantity, so the tolerance is a few ulps of the largest term.
    const double lhs = u1_identity_residual(p, in.cp.u0);
    const double rhs = grad_J(p, in.cp.u0).values().lpNorm<Eigen::Infinity>() / eps;
    const Eigen::VectorXd& u = in.cp.u0.values();
    const double scale = (p.gamma * laplacian(in.grid).apply(u).lpNorm<Eigen::Infinity>() +
                          2.0 * p.alpha * (u.array().square() * u.array().abs()).maxCoeff() +
                          2.0 * p.alpha * p.beta * u.lpNorm<Eigen::Infinity>() +
                          p.masked_source(in.grid).values().lpNorm<Eigen::Infinity>()) /
                         eps;
    r.conclusion(bound("u1_identity", "|u0 - u1|_inf = |dJ(u0)|_inf / eps", std::abs(lhs - rhs),
                       64.0 * std::numeric_limits<double>::epsilon() * (1.0 + scale), true));
  }

  const double minK = min_free(K_of(d.v0s, eps));
  if (converged && minK > 0.0) {
    const PenalizedMinResult pm = verify_penalized_min_t2(p, in.cp.u0, d, c.penalty_samples, c.seed);
    r.conclusion(bound("penalized_min_shortfall", kPenClause, -pm.worst_margin, 1e-9 * (1.0 + std::abs(in.J)),
                       true, std::to_string(pm.samples) + " samples"));
  } else {
    r.conclusion(bound("penalized_min_shortfall", kPenClause, kNaN, kNaN, false,
                       converged ? "K <= 0 at a free node" : why));
  }

  const double radius = c.radius.value_or(default_radius(d));
  const LocalMaxResult lm = verify_local_max_t2(p, d, radius, c.ball_samples, c.seed);
  Check ball = bound("local_max_ball", kBallClause, lm.worst_increase, 1e-10 * (1.0 + std::abs(J3)), all,
                     all ? std::to_string(lm.samples) + " samples" : why);
  if (all && !lm.ok) ball.status = Status::Fail;
  r.conclusion(ball);

  const T2Blocks b = hessian_blocks_t2(p, d);
  r.conclusion(bound("hessian_lambda_max", kHessClause, b.lambda_max, 1e-8, all, all ? "exact Hessian" : why));
  if (b.fd_lambda_max)
    r.conclusion(info("hessian_lambda_max_fd", "largest eigenvalue of the finite-difference dual Hessian",
                      *b.fd_lambda_max));
  if (b.fd_uu.size() > 0) {
    const char* cl = "exact Hessian block of the dual functional matches finite differences";
    r.conclusion(bound("block_uu", cl, b.err_uu, 1e-4, converged));
    r.conclusion(bound("block_vu", cl, b.err_vu, 1e-4, converged));
    r.conclusion(bound("block_vv", cl, b.err_vv, 1e-4, converged));
    r.conclusion(info("block_uu_reduced", "uu block -(B + B^2/eps) vs finite differences", b.err_uu_reduced));
    r.conclusion(info("block_vu_reduced", "cross block 4 u0 - 2 f/eps vs finite differences", b.err_vu_reduced));
  }
  if (b.scalar_det) {
    r.conclusion(info("scalar_det", "determinant of the 2x2 dual Hessian", *b.scalar_det));
    r.conclusion(info("scalar_det_sqrt_eps", "determinant times sqrt(eps)", *b.scalar_det * se));
  }
  r.timings.emplace_back("total_s", sw.seconds());
  return r;
}

VerificationReport run_conjugates(const RunConfig& c) {
  Stopwatch sw;
  VerificationReport r;
  Instance in = prepare(c, r, "conjugates");
  const GLParams& p = in.params;
  const GridSpec& g = in.grid;
  const double eps = p.epsilon;
  const bool with_f = c.theorem == 2;
  if (with_f && p.regime() != Boundary::Dirichlet)
    throw ConfigError("conjugates with theorem = 2 needs a Dirichlet grid with a source");

  const Eigen::ArrayXd u = in.cp.u0.values().array();
  const ScalarField v0s = in.cp.u0.with_values((p.alpha * (u.square() - p.beta)).matrix());
  const ScalarField K = K_of(v0s, eps);
  const double minK = min_free(K);
  r.hypothesis(hyp("weight_positive", "K = -2 v0 + eps > 0 at every free node", minK, 0.0, minK > 0.0));
  if (!(minK > 0.0)) {
    for (const char* n : {"fy_F", "fy_G0", "fy_G1K", "elimination"})
      r.conclusion(bound(n, "conjugate checks need K > 0", kNaN, kNaN, false, "K <= 0 at a free node"));
    r.timings.emplace_back("total_s", sw.seconds());
    return r;
  }

  const Eigen::VectorXd mask = g.free_mask();
  const ScalarField zs = in.cp.u0.with_values((K.values().array() * u).matrix().cwiseProduct(mask));
  const Eigen::VectorXd ratio = zs.values().cwiseQuotient(K.values()).cwiseProduct(mask);
  const ScalarField v1s =
      zs.with_values((p.gamma * laplacian(g).apply(ratio) + zs.values()).cwiseProduct(mask));

  const ConjugateResult F = conj_F(zs, K);
  const ConjugateResult G0 = conj_G0(p, zs, v1s);
  const ConjugateResult G1 = conj_G1K(v1s, v0s, K, p, with_f);
  r.describe("F_star", F.value);
  r.describe("G0_star", G0.value);
  r.describe("G1K_star", G1.value);

  auto tol = [](double v) { return 1e-9 * (1.0 + std::abs(v)); };
  const char* eq = "Fenchel-Young equality at the returned maximizer";
  r.conclusion(bound("fy_F", eq, std::abs(F.value - objective_F(zs, K, F.maximizer)), tol(F.value), true));
  r.conclusion(bound("fy_G0", eq, std::abs(G0.value - objective_G0(p, zs, v1s, G0.maximizer)), tol(G0.value), true));
  r.conclusion(bound("fy_G1K", eq,
                     std::abs(G1.value - objective_G1K(v1s, v0s, K, p, with_f, G1.maximizer, *G1.aux)),
                     tol(G1.value), true));

  // Fenchel-Young inequality at random arguments around each maximizer.
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  auto perturb = [&](const ScalarField& base, double scale) {
    Eigen::VectorXd v = base.values();
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += scale * unif(rng);
    return base.with_values(v);
  };
  double worst_F = -std::numeric_limits<double>::infinity(), worst_G0 = worst_F, worst_G1 = worst_F;
  const double scales[] = {0.1, 1.0, 10.0};
  for (int s = 0; s < c.conjugate_samples; ++s) {
    const double sc = scales[s % 3] * (1.0 + F.maximizer.values().lpNorm<Eigen::Infinity>());
    worst_F = std::max(worst_F, objective_F(zs, K, perturb(F.maximizer, sc)) - F.value);
    worst_G0 = std::max(worst_G0, objective_G0(p, zs, v1s, perturb(G0.maximizer, sc)) - G0.value);
    worst_G1 = std::max(worst_G1, objective_G1K(v1s, v0s, K, p, with_f, perturb(G1.maximizer, sc),
                                                perturb(*G1.aux, sc)) -
                                      G1.value);
  }
  const char* ineq = "conjugate value dominates the sup objective at sampled arguments";
  r.conclusion(bound("fy_F_sampled", ineq, worst_F, tol(F.value), true));
  r.conclusion(bound("fy_G0_sampled", ineq, worst_G0, tol(G0.value), true));
  r.conclusion(bound("fy_G1K_sampled", ineq, worst_G1, tol(G1.value), true));

  const double jk = F.value - G0.value - G1.value;
  double target;
  if (with_f) {
    target = eval_J3(p, DualPointT2{v0s, zs.with_values(ratio)});
  } else {
    target = eval_Jtilde(p, DualPointT1{v0s, zs});
  }
  r.describe("JK", jk);
  r.conclusion(bound("elimination",
                     "F* - G0* - G1K* at the eliminated multiplier equals the reduced dual functional",
                     std::abs(jk - target) / std::max(1.0, std::abs(target)), 1e-9, true));
  r.timings.emplace_back("total_s", sw.seconds());
  return r;
}

// ---------------------------------------------------------------------------
// Sweep

namespace {

struct Row {
  std::vector<std::string> cells;
  bool failed = false;
};

std::string opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string csv_escape(std::string s) {
  for (char& ch : s)
    if (ch == '"' || ch == '\n') ch = '\'';
  return "\"" + s + "\"";
}

Row sweep_row_t1(const RunConfig& c, const GridSpec& g, const ScalarField& init, double eps) {
  RunConfig ce = c;
  ce.epsilon = eps;
  const GLParams p = make_params(ce, g);
  const CriticalPoint cp = solve_critical(p, init, NewtonOptions{c.tol, c.max_iter, 30});
  const DualPointT1 d = construct_dual(p, cp.u0);
  const HypothesisReportT1 h = check_hypotheses_t1(p, d);
  const bool defined = cp.converged() && min_free(K_of(d.v0s, eps)) > 0.0;
  Row row;
  std::optional<double> gap, stat, det, lmax;
  if (defined) {
    const double J = eval_J(p, cp.u0);
    gap = std::abs(J - eval_Jtilde(p, d));
    stat = verify_stationarity_t1(p, d);
    const J1Blocks b = hessian_blocks_J1(p, d);
    det = b.scalar_det;
    const Eigen::VectorXd x = pack_free({&d.v0s, &d.zs});
    const Functional f = [&p, &d](const Eigen::VectorXd& y) {
      auto fs = unpack_free(y, {&d.v0s, &d.zs});
      return eval_Jtilde(p, DualPointT1{std::move(fs[0]), std::move(fs[1])});
    };
    lmax = detail::fd_lambda_max(f, x, packed_weights(g, 2));
    row.failed = *gap > 1e-8 * (1.0 + std::abs(J)) || *stat > 1e-5;
  }
  row.cells = {fmt(eps),
               cp.converged() ? "1" : "0",
               fmt(h.in_B.margin),
               fmt(h.op1.margin),
               fmt(h.op2.margin),
               h.all_ok() ? "1" : "0",
               opt(gap),
               opt(stat),
               opt(det),
               det ? fmt(*det * std::pow(eps, 1.5)) : std::string(),
               opt(lmax),
               ""};
  return row;
}

Row sweep_row_t2(const RunConfig& c, const GridSpec& g, const ScalarField& init, double eps) {
  RunConfig ce = c;
  ce.epsilon = eps;
  const GLParams p = make_params(ce, g);
  const CriticalPoint cp = solve_critical(p, init, NewtonOptions{c.tol, c.max_iter, 30});
  const DualPointT2 d = construct_dual_t2(p, cp.u0);
  const HypothesisReportT2 h = check_hypotheses_t2(p, cp.u0);
  Row row;
  const double J = eval_J(p, cp.u0);
  const double gap = std::abs(J - eval_J3(p, d));
  const double stat = verify_stationarity_t2(p, d);
  const T2Blocks b = hessian_blocks_t2(p, d);
  row.failed = cp.converged() && (gap > 1e-8 * (1.0 + std::abs(J)) || stat > 1e-5);
  row.cells = {fmt(eps),
               cp.converged() ? "1" : "0",
               fmt(h.op.margin),
               fmt(h.op_gamma_margin),
               fmt(h.sign.margin),
               h.all_ok() ? "1" : "0",
               fmt(gap),
               fmt(stat),
               opt(b.scalar_det),
               b.scalar_det ? fmt(*b.scalar_det * std::sqrt(eps)) : std::string(),
               fmt(b.lambda_max),
               ""};
  return row;
}

}  // namespace

SweepTable run_sweep(const RunConfig& c, const std::vector<double>& eps_list) {
  for (size_t i = 0; i < eps_list.size(); ++i) {
    const double e = eps_list[i];
    if (!(e > 0.0 && e < 1.0)) throw ConfigError("sweep epsilons must lie in (0, 1)");
    if (i > 0 && !(e < eps_list[i - 1])) throw ConfigError("sweep epsilons must be strictly decreasing");
  }
  const GridSpec g = make_grid(c);
  make_params(c, g);  // validates the source spec once, before any row runs
  const ScalarField init = make_init(c, g);

  SweepTable out;
  out.csv = c.theorem == 1
                ? "epsilon,converged,in_B_margin,op1_margin,op2_margin,hypotheses_ok,gap,stationarity,det,det_eps32,lambda_max,error\n"
                : "epsilon,converged,op_margin,op_gamma_margin,sign_margin,hypotheses_ok,gap,stationarity,det,det_sqrt_eps,lambda_max,error\n";

  std::vector<std::future<Row>> jobs;
  jobs.reserve(eps_list.size());
  for (const double eps : eps_list) {
    jobs.push_back(std::async(std::launch::async, [&c, &g, &init, eps]() {
      try {
        return c.theorem == 1 ? sweep_row_t1(c, g, init, eps) : sweep_row_t2(c, g, init, eps);
      } catch (const std::exception& e) {
        Row row;
        row.failed = true;
        row.cells = {fmt(eps), "", "", "", "", "", "", "", "", "", "", csv_escape(e.what())};
        return row;
      }
    }));
  }
  for (auto& job : jobs) {
    const Row row = job.get();
    if (row.failed) ++out.failed_rows;
    for (size_t i = 0; i < row.cells.size(); ++i) {
      if (i) out.csv += ',';
      out.csv += row.cells[i];
    }
    out.csv += '\n';
  }
  return out;
}

int exit_code(const VerificationReport& r) { return r.all_asserted_passed() ? 0 : 2; }

}  // namespace gldual
