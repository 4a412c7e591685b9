#include "gldual/verify.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace gldual {

namespace {

double probe(const Functional& f, const Eigen::VectorXd& x) {
  const double v = f(x);
  if (!std::isfinite(v)) throw DomainError("functional is not finite at probe point");
  return v;
}

// Central difference along coordinate i; shrinks the step on domain errors.
double central(const Functional& f, Eigen::VectorXd& x, int i, double h, const StepPolicy& pol,
               double* used_step) {
  const double xi = x[i];
  for (int attempt = 0; attempt <= pol.max_shrinks; ++attempt, h *= 0.1) {
    try {
      x[i] = xi + h;
      const double fp = probe(f, x);
      x[i] = xi - h;
      const double fm = probe(f, x);
      x[i] = xi;
      if (used_step) *used_step = h;
      return (fp - fm) / (2.0 * h);
    } catch (const DomainError&) {
      x[i] = xi;
    }
  }
  throw EvaluationFailure("cannot probe coordinate " + std::to_string(i) +
                          " inside the functional's domain");
}

}  // namespace

FdGradient fd_gradient(const Functional& f, const Eigen::VectorXd& x, const StepPolicy& policy) {
  FdGradient out;
  out.gradient.resize(x.size());
  out.extrapolated.resize(x.size());
  Eigen::VectorXd work = x;
  for (int i = 0; i < x.size(); ++i) {
    double h = policy.relative * (1.0 + std::abs(x[i]));
    const double g1 = central(f, work, i, h, policy, &h);
    const double g2 = central(f, work, i, 0.5 * h, policy, nullptr);
    out.gradient[i] = g1;
    out.extrapolated[i] = (4.0 * g2 - g1) / 3.0;
    if (std::abs(g1 - g2) > policy.richardson_tol * std::abs(g1) + policy.abs_floor)
      out.flagged.push_back(i);
  }
  return out;
}

Eigen::MatrixXd fd_hessian(const Functional& f, const Eigen::VectorXd& x, double relative_step) {
  const int n = static_cast<int>(x.size());
  if (n > kMaxHessianDofs)
    throw std::invalid_argument("fd_hessian is limited to " + std::to_string(kMaxHessianDofs) +
                                " degrees of freedom");
  Eigen::VectorXd h(n);
  for (int i = 0; i < n; ++i) h[i] = relative_step * (1.0 + std::abs(x[i]));

  Eigen::MatrixXd hess(n, n);
  Eigen::VectorXd w = x;
  auto eval = [&](int i, double si, int j, double sj) {
    w = x;
    w[i] += si;
    w[j] += sj;
    try {
      return probe(f, w);
    } catch (const DomainError& e) {
      throw EvaluationFailure(std::string("Hessian probe left the domain: ") + e.what());
    }
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double v = (eval(i, h[i], j, h[j]) - eval(i, h[i], j, -h[j]) -
                        eval(i, -h[i], j, h[j]) + eval(i, -h[i], j, -h[j])) /
                       (4.0 * h[i] * h[j]);
      hess(i, j) = hess(j, i) = v;
    }
  }
  return hess;
}

double lambda_extreme(const Eigen::MatrixXd& a, Extreme which) {
  if (a.rows() != a.cols() || a.rows() == 0) throw std::invalid_argument("square matrix expected");
  const double scale = std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const double defect = (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
  if (defect > 1e-10) throw NonSymmetric("symmetry defect " + std::to_string(defect));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()),
                                                    Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return which == Extreme::Min ? ev[0] : ev[ev.size() - 1];
}

double lambda_extreme(const LinOp& a, Extreme which) { return lambda_extreme(a.symmetrized(), which); }

double power_iteration_extreme(const Eigen::MatrixXd& a, Extreme which, int max_iter, double tol) {
  const int n = static_cast<int>(a.rows());
  // Gershgorin bound makes the shifted matrix positive semidefinite.
  const double sigma = a.cwiseAbs().rowwise().sum().maxCoeff();
  const Eigen::MatrixXd b = which == Extreme::Max
                                ? Eigen::MatrixXd(a + sigma * Eigen::MatrixXd::Identity(n, n))
                                : Eigen::MatrixXd(sigma * Eigen::MatrixXd::Identity(n, n) - a);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = 1.0 + 0.1 * std::sin(1.0 + i);
  v.normalize();
  double rho = v.dot(b * v);
  double last_check = rho;
  for (int it = 1; it <= max_iter; ++it) {
    v = b * v;
    v.normalize();
    rho = v.dot(b * v);
    if (it % 50 == 0) {
      if (std::abs(rho - last_check) <= tol * std::max(std::abs(rho), 1.0)) break;
      last_check = rho;
    }
  }
  return which == Extreme::Max ? rho - sigma : sigma - rho;
}

double min_singular_squared(const Eigen::MatrixXd& a) {
  const Eigen::MatrixXd ata = a.transpose() * a;
  return lambda_extreme(Eigen::MatrixXd(0.5 * (ata + ata.transpose())), Extreme::Min);
}

double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double denom = std::max(b.norm(), std::numeric_limits<double>::min());
  return (a - b).norm() / denom;
}

Eigen::VectorXd pack_free(const std::vector<const ScalarField*>& fields) {
  if (fields.empty()) return {};
  const GridSpec& g = fields.front()->grid();
  const auto dofs = g.free_nodes();
  const Eigen::Index m = static_cast<Eigen::Index>(dofs.size());
  Eigen::VectorXd x(m * static_cast<Eigen::Index>(fields.size()));
  for (size_t f = 0; f < fields.size(); ++f) {
    require_same_grid(g, fields[f]->grid());
    for (Eigen::Index a = 0; a < m; ++a) x[static_cast<Eigen::Index>(f) * m + a] = (*fields[f])[dofs[a]];
  }
  return x;
}

std::vector<ScalarField> unpack_free(const Eigen::VectorXd& x,
                                     const std::vector<const ScalarField*>& templates) {
  const GridSpec& g = templates.front()->grid();
  const auto dofs = g.free_nodes();
  const Eigen::Index m = static_cast<Eigen::Index>(dofs.size());
  std::vector<ScalarField> out;
  out.reserve(templates.size());
  for (size_t f = 0; f < templates.size(); ++f) {
    Eigen::VectorXd v = templates[f]->values();
    for (Eigen::Index a = 0; a < m; ++a) v[dofs[a]] = x[static_cast<Eigen::Index>(f) * m + a];
    out.emplace_back(g, std::move(v));
  }
  return out;
}

Eigen::VectorXd packed_weights(const GridSpec& g, int nfields) {
  const auto dofs = g.free_nodes();
  const Eigen::VectorXd w = g.weights();
  const Eigen::Index m = static_cast<Eigen::Index>(dofs.size());
  Eigen::VectorXd out(m * nfields);
  for (int f = 0; f < nfields; ++f)
    for (Eigen::Index a = 0; a < m; ++a) out[f * m + a] = w[dofs[a]];
  return out;
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Pass: return "pass";
    case Status::Fail: return "fail";
    case Status::NotAsserted: return "not-asserted";
    case Status::Info: return "info";
  }
  return "unknown";
}

Status bound_status(double measured, double threshold, bool asserted) {
  if (!asserted) return Status::NotAsserted;
  return (std::isfinite(measured) && measured <= threshold) ? Status::Pass : Status::Fail;
}

bool VerificationReport::all_asserted_passed() const {
  for (const auto& c : conclusions)
    if (c.status == Status::Fail) return false;
  return true;
}

namespace {

nlohmann::ordered_json number(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

nlohmann::ordered_json check_json(const char* kind, const Check& c) {
  nlohmann::ordered_json j;
  j["kind"] = kind;
  j["name"] = c.name;
  j["clause"] = c.clause;
  j["measured"] = number(c.measured);
  j["threshold"] = number(c.threshold);
  j["status"] = to_string(c.status);
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

}  // namespace

std::string VerificationReport::to_jsonl(bool with_timings) const {
  std::string out;
  nlohmann::ordered_json head;
  head["kind"] = "instance";
  head["command"] = command;
  for (const auto& [key, value] : instance) {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>)
            head[key] = number(v);
          else
            head[key] = v;
        },
        value);
  }
  out += head.dump() + "\n";
  for (const auto& c : hypotheses) out += check_json("hypothesis", c).dump() + "\n";
  for (const auto& c : conclusions) out += check_json("conclusion", c).dump() + "\n";
  nlohmann::ordered_json summary;
  summary["kind"] = "summary";
  summary["all_asserted_passed"] = all_asserted_passed();
  out += summary.dump() + "\n";
  if (with_timings) {
    nlohmann::ordered_json t;
    t["kind"] = "timings";
    for (const auto& [key, secs] : timings) t[key] = secs;
    out += t.dump() + "\n";
  }
  return out;
}

}  // namespace gldual
