// SPDX-License-Identifier: Apache-2.0
#include "cfisac/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cfisac {

std::string to_string(OptimizationMode mode) {
  switch (mode) {
    case OptimizationMode::e2e_isac: return "e2e_isac";
    case OptimizationMode::tx_only_isac: return "tx_only_isac";
    case OptimizationMode::e2e_no_sensing: return "e2e_no_sensing";
  }
  throw std::logic_error("unreachable mode");
}

OptimizationMode mode_from_string(const std::string& name) {
  if (name == "e2e_isac") return OptimizationMode::e2e_isac;
  if (name == "tx_only_isac") return OptimizationMode::tx_only_isac;
  if (name == "e2e_no_sensing") return OptimizationMode::e2e_no_sensing;
  throw std::invalid_argument("unknown optimization mode: " + name);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Problem data in natural units.  Stream columns are the *active* ones: the
// sensing beam is column 0 only when the mode keeps it.
// ---------------------------------------------------------------------------

struct ProblemData {
  int n_ue = 0, n_act = 0, n_tx = 0, n_rx = 0, m = 0;
  bool has_sensing = false;

  VectorXd b;        // n_ue coherent gains
  MatrixXd cone_g;   // n_ue x n_act: squared cross gains, self column += b^2
  MatrixXd fsq;      // n_tx x n_act per-AP squared loads
  VectorXd a_diag, b_diag;  // n_act sensing quadratic diagonals

  double noise_w = 0.0, p_tx_max_w = 0.0, gamma_s = 0.0;
  VectorXd qinv_eps, bits_ln2;  // n_ue reliability constants
  int l_pilot = 0, l_cap = 0;

  OpsBreakdown ops;     // workload of this mode/detector
  double ops_fixed = 0.0, ops_sym = 0.0;
  double s0 = 1.0;      // sensing row scale
  double lambda = 10.0;

  int self_col(int ue) const { return has_sensing ? ue + 1 : ue; }
};

struct Layout {
  int n_act = 0, n_ue = 0;
  bool has_l = false, has_chi0 = false;
  int iq = 0, ichi = 0, ir = 0, il = -1, ilbar = -1, it = -1, ichi0 = -1;
  int dim = 0;
};

Layout make_layout(const ProblemData& pd, bool has_l, bool has_chi0) {
  Layout lay;
  lay.n_act = pd.n_act;
  lay.n_ue = pd.n_ue;
  lay.has_l = has_l;
  lay.has_chi0 = has_chi0;
  lay.iq = 0;
  lay.ichi = pd.n_act;
  lay.ir = pd.n_act + pd.n_ue;
  int next = pd.n_act + 2 * pd.n_ue;
  if (has_l) {
    lay.il = next++;
    lay.ilbar = next++;
  }
  lay.it = next++;
  if (has_chi0) lay.ichi0 = next++;
  lay.dim = next;
  return lay;
}

// ---------------------------------------------------------------------------
// Constraint rows.  Inequalities g(z) <= 0 take a -log(-g) barrier; cones
// keep h(z) > 0 with a -log(h) barrier.
// ---------------------------------------------------------------------------

enum class RowKind { linear, quad, reliability, cone_power, cone_epigraph };

struct Row {
  RowKind kind = RowKind::linear;
  double scale = 1.0;
  // linear / quad: g = (c.z + d + sum w_j z_j^2) / scale
  std::vector<std::pair<int, double>> lin;   // (index, coefficient)
  std::vector<std::pair<int, double>> quad;  // (index, weight)
  double d = 0.0;
  int ue = -1;
  double rel_alpha = 0.0, rel_beta = 0.0;  // reliability linearization
  bool in_phase1 = false;
};

struct Subproblem {
  const ProblemData* pd = nullptr;
  Layout lay;
  std::vector<Row> rows;   // barrier -log(-g)
  std::vector<Row> cones;  // barrier -log(h)
  double fixed_u = 0.0;    // L - L_p when L is pinned
  double fixed_lbar = 0.0;
  VectorXd obj_c;
  double obj_d = 0.0;
  int phase1_w = -1;  // slack variable index (appended) during Phase-I

  int dim() const { return lay.dim + (phase1_w >= 0 ? 1 : 0); }
  double objective(const VectorXd& z) const {
    if (phase1_w >= 0) return z[phase1_w];
    return obj_c.dot(z.head(lay.dim)) + obj_d;
  }
};

// Value of one inequality row (scaled).  grad may be null.
double row_value(const Subproblem& sp, const Row& row, const VectorXd& z, VectorXd* grad,
                 MatrixXd* hess) {
  const Layout& lay = sp.lay;
  double g = 0.0;
  switch (row.kind) {
    case RowKind::linear:
    case RowKind::quad: {
      g = row.d;
      for (const auto& [j, c] : row.lin) g += c * z[j];
      for (const auto& [j, w] : row.quad) g += w * z[j] * z[j];
      g /= row.scale;
      if (grad) {
        for (const auto& [j, c] : row.lin) (*grad)[j] += c / row.scale;
        for (const auto& [j, w] : row.quad) (*grad)[j] += 2.0 * w * z[j] / row.scale;
      }
      if (hess)
        for (const auto& [j, w] : row.quad) (*hess)(j, j) += 2.0 * w / row.scale;
      break;
    }
    case RowKind::reliability: {
      const int i = row.ue;
      const double chi = z[lay.ichi + i];
      const double qi = z[lay.iq + sp.pd->self_col(i)];
      const double ri = z[lay.ir + i];
      const double u = lay.has_l ? z[lay.il] - sp.pd->l_pilot : sp.fixed_u;
      if (u <= 0.0 || chi <= -1.0) return kInf;
      const double su = std::sqrt(u);
      const double qv = sp.pd->qinv_eps[i], cb = sp.pd->bits_ln2[i];
      g = qv / su + cb / u - std::log1p(chi) + chi - row.rel_alpha * qi + row.rel_beta * ri;
      g /= row.scale;
      if (grad) {
        (*grad)[lay.ichi + i] += (chi / (1.0 + chi)) / row.scale;
        (*grad)[lay.iq + sp.pd->self_col(i)] += -row.rel_alpha / row.scale;
        (*grad)[lay.ir + i] += row.rel_beta / row.scale;
        if (lay.has_l) (*grad)[lay.il] += (-0.5 * qv / (u * su) - cb / (u * u)) / row.scale;
      }
      if (hess) {
        (*hess)(lay.ichi + i, lay.ichi + i) += 1.0 / ((1.0 + chi) * (1.0 + chi)) / row.scale;
        if (lay.has_l)
          (*hess)(lay.il, lay.il) += (0.75 * qv / (u * u * su) + 2.0 * cb / (u * u * u)) / row.scale;
      }
      break;
    }
    default:
      throw std::logic_error("row_value: cone passed as inequality");
  }
  if (row.in_phase1 && sp.phase1_w >= 0) {
    g -= z[sp.phase1_w];
    if (grad) (*grad)[sp.phase1_w] -= 1.0;
  }
  return g;
}

// Value of one cone h(z) (natural units).  Must stay positive.
double cone_value(const Subproblem& sp, const Row& row, const VectorXd& z, VectorXd* grad,
                  MatrixXd* hess) {
  const Layout& lay = sp.lay;
  if (row.kind == RowKind::cone_power) {
    const int i = row.ue;
    const double chi = z[lay.ichi + i];
    const double ri = z[lay.ir + i];
    double h = (1.0 + chi) * ri - sp.pd->noise_w;
    for (int j = 0; j < lay.n_act; ++j) {
      const double qj = z[lay.iq + j];
      h -= sp.pd->cone_g(i, j) * qj * qj;
    }
    if (grad) {
      (*grad)[lay.ichi + i] += ri;
      (*grad)[lay.ir + i] += 1.0 + chi;
      for (int j = 0; j < lay.n_act; ++j)
        (*grad)[lay.iq + j] += -2.0 * sp.pd->cone_g(i, j) * z[lay.iq + j];
    }
    if (hess) {
      (*hess)(lay.ichi + i, lay.ir + i) += 1.0;
      (*hess)(lay.ir + i, lay.ichi + i) += 1.0;
      for (int j = 0; j < lay.n_act; ++j)
        (*hess)(lay.iq + j, lay.iq + j) += -2.0 * sp.pd->cone_g(i, j);
    }
    return h;
  }
  // epigraph: t * lbar >= ||q||^2
  const double t = z[lay.it];
  const double lb = lay.has_l ? z[lay.ilbar] : sp.fixed_lbar;
  double h = t * lb;
  for (int j = 0; j < lay.n_act; ++j) h -= z[lay.iq + j] * z[lay.iq + j];
  if (grad) {
    (*grad)[lay.it] += lb;
    if (lay.has_l) (*grad)[lay.ilbar] += t;
    for (int j = 0; j < lay.n_act; ++j) (*grad)[lay.iq + j] += -2.0 * z[lay.iq + j];
  }
  if (hess) {
    if (lay.has_l) {
      (*hess)(lay.it, lay.ilbar) += 1.0;
      (*hess)(lay.ilbar, lay.it) += 1.0;
    }
    for (int j = 0; j < lay.n_act; ++j) (*hess)(lay.iq + j, lay.iq + j) += -2.0;
  }
  return h;
}

// Barrier potential obj/mu + Phi.  Returns +inf outside the domain.
double barrier_phi(const Subproblem& sp, const VectorXd& z, double mu, VectorXd* grad,
                   MatrixXd* hess) {
  const int n = sp.dim();
  if (grad) grad->setZero(n);
  if (hess) hess->setZero(n, n);

  double phi = sp.objective(z) / mu;
  if (!std::isfinite(phi)) return kInf;
  if (grad) {
    if (sp.phase1_w >= 0)
      (*grad)[sp.phase1_w] += 1.0 / mu;
    else
      grad->head(sp.lay.dim) += sp.obj_c / mu;
  }

  VectorXd gg(n);
  MatrixXd gh;
  for (const Row& row : sp.rows) {
    gg.setZero();
    if (hess) gh.setZero(n, n);
    const double g = row_value(sp, row, z, grad ? &gg : nullptr, hess ? &gh : nullptr);
    if (!(g < 0.0)) return kInf;
    phi += -std::log(-g);
    if (grad) *grad += gg / (-g);
    if (hess) *hess += (gg * gg.transpose()) / (g * g) + gh / (-g);
  }
  for (const Row& row : sp.cones) {
    gg.setZero();
    if (hess) gh.setZero(n, n);
    const double h = cone_value(sp, row, z, grad ? &gg : nullptr, hess ? &gh : nullptr);
    if (!(h > 0.0)) return kInf;
    phi += -std::log(h);
    if (grad) *grad += -gg / h;
    if (hess) *hess += (gg * gg.transpose()) / (h * h) - gh / h;
  }
  return phi;
}

// Damped, diagonally-preconditioned Newton descent on the barrier potential.
bool center(const Subproblem& sp, VectorXd& z, double mu, const VectorXd& var_scale) {
  const bool dbg = std::getenv("CFISAC_OPT_DEBUG") != nullptr;
  const int n = sp.dim();
  VectorXd grad(n);
  MatrixXd hess(n, n);
  for (int iter = 0; iter < 120; ++iter) {
    const double phi = barrier_phi(sp, z, mu, &grad, &hess);
    if (!std::isfinite(phi)) return false;

    const VectorXd gs = var_scale.asDiagonal() * grad;
    MatrixXd hs = var_scale.asDiagonal() * hess * var_scale.asDiagonal();

    VectorXd step;
    double dec = -1.0;
    double damp = 0.0;
    for (int attempt = 0; attempt < 30; ++attempt) {
      MatrixXd hd = hs;
      if (damp > 0.0) hd.diagonal().array() += damp;
      const VectorXd ps = hd.ldlt().solve(-gs);
      const double d = -gs.dot(ps);
      if (ps.allFinite() && d > 0.0) {
        step = var_scale.asDiagonal() * ps;
        dec = d;
        break;
      }
      damp = damp == 0.0 ? 1e-10 * (1.0 + hs.diagonal().cwiseAbs().maxCoeff()) : damp * 100.0;
    }
    if (dec <= 0.0) {
      if (dbg) std::fprintf(stderr, "  [c] iter=%d no-descent phi=%.8g\n", iter, phi);
      return iter > 0;  // stalled; accept what we have
    }
    if (0.5 * dec < 1e-13 * (1.0 + std::abs(phi))) {
      if (dbg) std::fprintf(stderr, "  [c] iter=%d converged dec=%.3g phi=%.8g\n", iter, dec, phi);
      return true;
    }

    double alpha = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 70; ++bt) {
      const VectorXd zn = z + alpha * step;
      const double pn = barrier_phi(sp, zn, mu, nullptr, nullptr);
      if (pn <= phi - 1e-4 * alpha * dec) {
        z = zn;
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) {
      if (dbg) std::fprintf(stderr, "  [c] iter=%d linesearch-dead dec=%.3g phi=%.8g\n", iter, dec, phi);
      return true;  // line search exhausted: numerically converged
    }
  }
  if (dbg) std::fprintf(stderr, "  [c] iter-cap\n");
  return true;
}

VectorXd variable_scale(const Subproblem& sp, const VectorXd& z) {
  const Layout& lay = sp.lay;
  const ProblemData& pd = *sp.pd;
  VectorXd s = VectorXd::Ones(sp.dim());
  const double qs = std::sqrt(pd.p_tx_max_w);
  for (int j = 0; j < lay.n_act; ++j) s[lay.iq + j] = std::max(1e-3 * qs, std::abs(z[lay.iq + j]));
  for (int i = 0; i < lay.n_ue; ++i) {
    s[lay.ichi + i] = std::max(1e-3, std::abs(z[lay.ichi + i]));
    s[lay.ir + i] = std::max(pd.noise_w, std::abs(z[lay.ir + i]));
  }
  if (lay.has_l) {
    s[lay.il] = std::max(1.0, std::abs(z[lay.il]));
    s[lay.ilbar] = std::max(1.0 / (pd.l_cap - pd.l_pilot), std::abs(z[lay.ilbar]));
  }
  s[lay.it] = std::max(1e-6 * pd.p_tx_max_w, std::abs(z[lay.it]));
  if (lay.has_chi0) s[lay.ichi0] = std::max(1e-6, std::abs(z[lay.ichi0]));
  return s;
}

// Largest inequality-row value (scaled); negative means strictly feasible.
double max_row_value(const Subproblem& sp, const VectorXd& z) {
  double worst = -kInf;
  for (const Row& row : sp.rows)
    worst = std::max(worst, row_value(sp, row, z, nullptr, nullptr));
  return worst;
}

bool cones_strict(const Subproblem& sp, const VectorXd& z) {
  for (const Row& row : sp.cones)
    if (!(cone_value(sp, row, z, nullptr, nullptr) > 0.0)) return false;
  return true;
}

// Phase-II barrier path.  z must be strictly feasible on entry.
void solve_barrier(Subproblem& sp, VectorXd& z, int n_barrier_terms) {
  double mu = 1.0;
  for (int level = 0; level < 16; ++level) {
    const VectorXd vs = variable_scale(sp, z);
    center(sp, z, mu, vs);
    const double f = sp.objective(z);
    if (mu <= 1e-8 && n_barrier_terms * mu <= 1e-7 * (1.0 + std::abs(f))) break;
    if (mu <= 1e-13) break;
    mu *= 0.1;
  }
}

// Phase-I: minimize a shared slack on the violated rows.  Returns true when a
// strictly feasible point was found (z updated in place).
bool phase1(Subproblem& sp, VectorXd& z) {
  const bool dbg = std::getenv("CFISAC_OPT_DEBUG") != nullptr;
  double worst = -kInf;
  int flagged = 0;
  for (Row& row : sp.rows) {
    const double g = row_value(sp, row, z, nullptr, nullptr);
    if (g >= -1e-9) {
      row.in_phase1 = true;
      ++flagged;
      if (dbg) std::fprintf(stderr, "[p1] flag kind=%d ue=%d g=%.6g\n", (int)row.kind, row.ue, g);
    }
    worst = std::max(worst, g);
  }
  if (flagged == 0) return true;
  if (!cones_strict(sp, z)) {
    if (dbg) std::fprintf(stderr, "[p1] cones not strict at entry\n");
    return false;  // caller re-initializes
  }

  sp.phase1_w = sp.lay.dim;
  VectorXd ze(sp.lay.dim + 1);
  ze.head(sp.lay.dim) = z;
  ze[sp.phase1_w] = std::max(0.0, worst) + 1.0;

  double mu = 1.0;
  for (int level = 0; level < 12; ++level) {
    const VectorXd vs = variable_scale(sp, ze);  // slack slot scales as 1
    center(sp, ze, mu, vs);
    if (dbg) std::fprintf(stderr, "[p1] mu=%.1e w=%.8g\n", mu, ze[sp.phase1_w]);
    if (ze[sp.phase1_w] < -1e-4) break;
    mu *= 0.1;
  }
  const bool ok = ze[sp.phase1_w] < 0.0;
  sp.phase1_w = -1;
  for (Row& row : sp.rows) row.in_phase1 = false;
  if (!ok) return false;
  z = ze.head(sp.lay.dim);
  return max_row_value(sp, z) < 0.0 && cones_strict(sp, z);
}

// ---------------------------------------------------------------------------
// Subproblem assembly
// ---------------------------------------------------------------------------

struct Linearization {
  VectorXd qhat;   // n_act
  VectorXd rhat;   // n_ue
  double lbar_hat = 0.0;
};

Subproblem build_subproblem(const ProblemData& pd, const Layout& lay, const Linearization& lin,
                            double k_l, double k_t, double c_obj, int l_fixed) {
  Subproblem sp;
  sp.pd = &pd;
  sp.lay = lay;
  if (!lay.has_l) {
    sp.fixed_u = l_fixed - pd.l_pilot;
    sp.fixed_lbar = 1.0 / sp.fixed_u;
  }

  sp.obj_c = VectorXd::Zero(lay.dim);
  if (lay.has_l) sp.obj_c[lay.il] = k_l;
  sp.obj_c[lay.it] = k_t;
  if (lay.has_chi0) sp.obj_c[lay.ichi0] = pd.lambda;
  sp.obj_d = c_obj + (lay.has_l ? 0.0 : k_l * l_fixed);

  const double qs = std::sqrt(pd.p_tx_max_w);

  // variable bounds
  for (int j = 0; j < lay.n_act; ++j) {
    Row r;
    r.lin = {{lay.iq + j, -1.0}};
    r.scale = qs;
    sp.rows.push_back(std::move(r));
  }
  for (int i = 0; i < lay.n_ue; ++i) {
    Row r;
    r.lin = {{lay.ichi + i, -1.0}};
    sp.rows.push_back(std::move(r));
  }
  if (lay.has_chi0) {
    Row r;
    r.lin = {{lay.ichi0, -1.0}};
    sp.rows.push_back(std::move(r));
    Row rc;  // compactness cap; far above any admissible scaled violation
    rc.lin = {{lay.ichi0, 1.0}};
    rc.d = -1e3;
    rc.scale = 1e3;
    sp.rows.push_back(std::move(rc));
  }
  {
    // epigraph cap: t tracks sum(rho)*L_d, itself capped by the power budgets
    const double t_cap =
        2.0 * pd.n_tx * pd.p_tx_max_w * (lay.has_l ? pd.l_cap - pd.l_pilot : l_fixed - pd.l_pilot);
    Row r;
    r.lin = {{lay.it, 1.0}};
    r.d = -t_cap;
    r.scale = t_cap;
    sp.rows.push_back(std::move(r));
  }
  if (lay.has_l) {
    const double lspan = pd.l_cap - pd.l_pilot;
    {
      Row r;  // L <= l_cap
      r.lin = {{lay.il, 1.0}};
      r.d = -static_cast<double>(pd.l_cap);
      r.scale = lspan;
      sp.rows.push_back(std::move(r));
    }
    {
      Row r;  // L >= l_pilot + 1
      r.lin = {{lay.il, -1.0}};
      r.d = pd.l_pilot + 1.0;
      r.scale = lspan;
      sp.rows.push_back(std::move(r));
    }
    {
      Row r;  // lbar >= 1/(l_cap - l_pilot)
      r.lin = {{lay.ilbar, -1.0}};
      r.d = 1.0 / lspan;
      r.scale = 1.0 / lspan;
      sp.rows.push_back(std::move(r));
    }
    {
      Row r;  // lbar <= 1
      r.lin = {{lay.ilbar, 1.0}};
      r.d = -1.0;
      sp.rows.push_back(std::move(r));
    }
    {
      // data-length surrogate: L - l_p <= 2/lbar^ - lbar/lbar^2 (tangent of
      // 1/lbar at the previous iterate, so the true bound always holds)
      Row r;
      r.lin = {{lay.il, 1.0}, {lay.ilbar, 1.0 / (lin.lbar_hat * lin.lbar_hat)}};
      r.d = -pd.l_pilot - 2.0 / lin.lbar_hat;
      r.scale = lspan;
      sp.rows.push_back(std::move(r));
    }
  }

  // per-AP power budgets
  for (int k = 0; k < pd.n_tx; ++k) {
    Row r;
    r.kind = RowKind::quad;
    r.d = -pd.p_tx_max_w;
    r.scale = pd.p_tx_max_w;
    for (int j = 0; j < lay.n_act; ++j)
      if (pd.fsq(k, j) > 0.0) r.quad.emplace_back(lay.iq + j, pd.fsq(k, j));
    sp.rows.push_back(std::move(r));
  }

  // reliability rows (one per UE), with the quadratic-over-linear SINR bound
  // linearized at the previous iterate
  for (int i = 0; i < lay.n_ue; ++i) {
    Row r;
    r.kind = RowKind::reliability;
    r.ue = i;
    const double qh = lin.qhat[pd.self_col(i)];
    const double rh = lin.rhat[i];
    r.rel_alpha = 2.0 * qh * pd.b[i] * pd.b[i] / rh;
    r.rel_beta = (qh * pd.b[i] / rh) * (qh * pd.b[i] / rh);
    sp.rows.push_back(std::move(r));
  }

  // sensing requirement with its concave part linearized; the scaled slack
  // variable keeps early rounds feasible and is frozen to zero by the driver
  if (pd.has_sensing) {
    Row r;
    r.kind = RowKind::quad;
    r.scale = 1.0;
    double d = pd.gamma_s * pd.m * pd.n_rx * pd.noise_w;
    for (int j = 0; j < lay.n_act; ++j) {
      r.quad.emplace_back(lay.iq + j, pd.gamma_s * pd.b_diag[j] / pd.s0);
      const double lin_c = -2.0 * pd.m * pd.a_diag[j] * lin.qhat[j];
      if (lin_c != 0.0) r.lin.emplace_back(lay.iq + j, lin_c / pd.s0);
      d += pd.m * pd.a_diag[j] * lin.qhat[j] * lin.qhat[j];
    }
    r.d = d / pd.s0;
    if (lay.has_chi0) r.lin.emplace_back(lay.ichi0, -1.0);
    sp.rows.push_back(std::move(r));
  }

  // received-power cones and the transmit-energy epigraph
  for (int i = 0; i < lay.n_ue; ++i) {
    Row r;
    r.kind = RowKind::cone_power;
    r.ue = i;
    sp.cones.push_back(std::move(r));
  }
  {
    Row r;
    r.kind = RowKind::cone_epigraph;
    sp.cones.push_back(std::move(r));
  }
  return sp;
}

VectorXd cold_init(const ProblemData& pd, const Layout& lay, int l_fixed) {
  VectorXd z = VectorXd::Zero(lay.dim);
  // Half the power budget spread over the streams: every stream starts with
  // leverage, so the first linearizations of the beam-dependent terms bite.
  for (int j = 0; j < lay.n_act; ++j) {
    const double fmax = std::max(pd.fsq.col(j).maxCoeff(), 1e-12);
    z[lay.iq + j] = std::sqrt(pd.p_tx_max_w / (2.0 * lay.n_act * fmax));
  }
  for (int i = 0; i < pd.n_ue; ++i) {
    double p = pd.noise_w;
    for (int j = 0; j < lay.n_act; ++j)
      p += pd.cone_g(i, j) * z[lay.iq + j] * z[lay.iq + j];
    const double qi = z[lay.iq + pd.self_col(i)];
    const double sig = qi * qi * pd.b[i] * pd.b[i];
    z[lay.ir + i] = p * 1.05;
    // row-optimal multiplier for this power split given the relaxed cone
    z[lay.ichi + i] = std::max(1e-6, sig / (1.05 * p - sig));
  }
  double lbar0;
  if (lay.has_l) {
    const double lspan = pd.l_cap - pd.l_pilot;
    z[lay.il] = pd.l_pilot + 0.97 * lspan;
    lbar0 = 1.02 / lspan;
    z[lay.ilbar] = lbar0;
  } else {
    lbar0 = 1.0 / (l_fixed - pd.l_pilot);
  }
  double qsq = 0.0;
  for (int j = 0; j < lay.n_act; ++j) qsq += z[lay.iq + j] * z[lay.iq + j];
  z[lay.it] = qsq / lbar0 * 1.05;
  if (lay.has_chi0) {
    double v = pd.gamma_s * pd.m * pd.n_rx * pd.noise_w;
    for (int j = 0; j < lay.n_act; ++j) {
      const double qj = z[lay.iq + j];
      v += (pd.gamma_s * pd.b_diag[j] - pd.m * pd.a_diag[j]) * qj * qj;
    }
    z[lay.ichi0] = std::max(0.0, v / pd.s0) + 1e-6 * (1.0 + std::abs(v) / pd.s0);
  }
  return z;
}

Linearization linearization_at(const ProblemData& pd, const Layout& lay, const VectorXd& z,
                               int l_fixed) {
  Linearization lin;
  lin.qhat = z.segment(lay.iq, lay.n_act);
  lin.rhat = z.segment(lay.ir, lay.n_ue);
  lin.lbar_hat = lay.has_l ? z[lay.ilbar] : 1.0 / (l_fixed - pd.l_pilot);
  return lin;
}

// ---------------------------------------------------------------------------
// Driver helpers
// ---------------------------------------------------------------------------

double continuous_gops(const ProblemData& pd, double l, double bandwidth_hz) {
  return (pd.ops_fixed + (l - pd.l_pilot) * pd.ops_sym) * bandwidth_hz / (l * 1e9);
}

int gpp_count_at(const ProblemData& pd, double l, const Scenario& s) {
  return cloud_power(continuous_gops(pd, l, s.radio.bandwidth_hz), s.power_model).n_gpp;
}

// Exact-feasibility check of an allocation against the verified metrics.
bool allocation_feasible(const ProblemData& pd, const Scenario& s, const VectorXd& rho_full,
                         const MomentStats& stats, int l) {
  const BlocklengthPlan plan{l, pd.l_pilot};
  if (l <= pd.l_pilot || l > pd.l_cap) return false;
  for (int k = 0; k < pd.n_tx; ++k) {
    double p = 0.0;
    for (int j = 0; j < stats.f.cols(); ++j) p += stats.f(k, j) * stats.f(k, j) * rho_full[j];
    if (p > pd.p_tx_max_w * (1.0 + 1e-9)) return false;
  }
  for (int i = 0; i < pd.n_ue; ++i) {
    const double sinr = sinr_dl_lb(rho_full, i + 1, stats.b[i], stats.a.row(i).transpose(),
                                   pd.noise_w);
    const double dep = dep_upper_bound(sinr, s.urllc[i].packet_bits, plan);
    if (dep > s.urllc[i].dep_threshold * (1.0 + 1e-9)) return false;
    if (delay_upper_bound(plan, s.radio.bandwidth_hz, s.urllc[i].dep_threshold) >
        s.urllc[i].delay_threshold_s * (1.0 + 1e-9))
      return false;
  }
  if (pd.has_sensing) {
    const double ss = avg_sensing_sinr(rho_full.cwiseSqrt(), stats.a_diag, stats.b_diag, pd.m,
                                       pd.n_rx, pd.noise_w);
    if (ss < pd.gamma_s * (1.0 - 1e-9)) return false;
  }
  return true;
}

// Smallest uniform power scale c in (0, c_cap] that keeps (c^2 rho, l)
// feasible.  Every requirement is monotone in a uniform scale, so the
// feasible c form an interval ending at c_cap; bisection finds its edge.
// Returns a negative number when even c_cap fails.
double minimal_feasible_scale(const ProblemData& pd, const Scenario& s, const VectorXd& rho_full,
                              const MomentStats& stats, int l) {
  double c_cap = kInf;
  for (int k = 0; k < pd.n_tx; ++k) {
    double p = 0.0;
    for (int j = 0; j < stats.f.cols(); ++j) p += stats.f(k, j) * stats.f(k, j) * rho_full[j];
    if (p > 0.0) c_cap = std::min(c_cap, std::sqrt(pd.p_tx_max_w / p));
  }
  if (!std::isfinite(c_cap)) return -1.0;
  auto ok = [&](double c) {
    return allocation_feasible(pd, s, (c * c) * rho_full, stats, l);
  };
  if (!ok(c_cap)) return -1.0;
  double lo = 0.0, hi = c_cap;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ok(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

// Fallback start for round zero.  cold_init is only a heuristic: with a tight
// blocklength cap or a dominant self-signal term the reliability rows
// linearized there can carve out an empty subproblem even though the exact
// requirements are satisfiable.  Rebuild the iterate around the cold uniform
// power split rescaled into the interval the exact metrics certify; r sits
// just above the interference floor so chi tracks the true SINR and the
// relinearized reliability row reduces to the certified bound.
bool feasible_warm_init(const ProblemData& pd, const Scenario& s, const MomentStats& stats,
                        const Layout& lay, int l_fixed, VectorXd& z) {
  VectorXd q0(lay.n_act);
  VectorXd rho_full = VectorXd::Zero(pd.n_ue + 1);
  for (int j = 0; j < lay.n_act; ++j) {
    const double fmax = std::max(pd.fsq.col(j).maxCoeff(), 1e-12);
    q0[j] = std::sqrt(pd.p_tx_max_w / (2.0 * lay.n_act * fmax));
    rho_full[pd.has_sensing ? j : j + 1] = q0[j] * q0[j];
  }
  const int l_chk = l_fixed > 0 ? l_fixed : pd.l_cap;
  const double c_min = minimal_feasible_scale(pd, s, rho_full, stats, l_chk);
  if (c_min < 0.0) return false;
  double c_cap = kInf;
  for (int k = 0; k < pd.n_tx; ++k) {
    double p = 0.0;
    for (int j = 0; j < lay.n_act; ++j) p += pd.fsq(k, j) * q0[j] * q0[j];
    if (p > 0.0) c_cap = std::min(c_cap, std::sqrt(pd.p_tx_max_w / p));
  }
  if (!std::isfinite(c_cap)) return false;
  const double c = std::sqrt(c_min * c_cap);

  z = VectorXd::Zero(lay.dim);
  for (int j = 0; j < lay.n_act; ++j) z[lay.iq + j] = c * q0[j];
  for (int i = 0; i < pd.n_ue; ++i) {
    double p = pd.noise_w;
    for (int j = 0; j < lay.n_act; ++j) p += pd.cone_g(i, j) * z[lay.iq + j] * z[lay.iq + j];
    const double qi = z[lay.iq + pd.self_col(i)];
    const double sig = qi * qi * pd.b[i] * pd.b[i];
    z[lay.ir + i] = (p - sig) * (1.0 + 1e-6);
    z[lay.ichi + i] = std::max(1e-6, sig / z[lay.ir + i]);
  }
  double lbar0;
  if (lay.has_l) {
    const double lspan = pd.l_cap - pd.l_pilot;
    z[lay.il] = pd.l_pilot + 0.98 * lspan;
    lbar0 = 1.01 / lspan;
    z[lay.ilbar] = lbar0;
  } else {
    lbar0 = 1.0 / (l_fixed - pd.l_pilot);
  }
  double qsq = 0.0;
  for (int j = 0; j < lay.n_act; ++j) qsq += z[lay.iq + j] * z[lay.iq + j];
  z[lay.it] = qsq / lbar0 * 1.05;
  if (lay.has_chi0) {
    double v = pd.gamma_s * pd.m * pd.n_rx * pd.noise_w;
    for (int j = 0; j < lay.n_act; ++j) {
      const double qj = z[lay.iq + j];
      v += (pd.gamma_s * pd.b_diag[j] - pd.m * pd.a_diag[j]) * qj * qj;
    }
    z[lay.ichi0] = std::max(0.0, v / pd.s0) + 1e-6 * (1.0 + std::abs(v) / pd.s0);
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

SolveResult solve_allocation(const Scenario& s, const MomentStats& stats, OptimizationMode mode,
                             DetectorKind detector, const SolveOptions& opts) {
  const int n_ue = s.radio.num_ues;
  if (stats.n_ue != n_ue || stats.n_tx != s.radio.num_tx_aps)
    throw std::invalid_argument("solve_allocation: moment statistics do not match the scenario");

  SolveResult res;
  res.mode = mode;
  res.detector = detector;
  res.rho_w = VectorXd::Zero(n_ue + 1);
  res.plan = BlocklengthPlan{0, s.radio.pilot_length};

  ProblemData pd;
  pd.n_ue = n_ue;
  pd.has_sensing = mode != OptimizationMode::e2e_no_sensing;
  if (pd.has_sensing && s.radio.num_rx_aps < 1)
    throw std::invalid_argument("solve_allocation: sensing modes need at least one receive AP");
  pd.n_act = pd.has_sensing ? n_ue + 1 : n_ue;
  pd.n_tx = s.radio.num_tx_aps;
  pd.n_rx = s.radio.num_rx_aps;
  pd.m = s.radio.antennas_per_ap;
  pd.noise_w = s.radio.noise_power_w;
  pd.p_tx_max_w = s.radio.max_tx_power_w;
  pd.gamma_s = s.sensing.sinr_threshold;
  pd.lambda = opts.slack_penalty;

  const auto col_of = [&](int j_act) { return pd.has_sensing ? j_act : j_act + 1; };
  pd.b = stats.b;
  pd.cone_g = MatrixXd::Zero(n_ue, pd.n_act);
  pd.fsq = MatrixXd::Zero(pd.n_tx, pd.n_act);
  pd.a_diag = VectorXd::Zero(pd.n_act);
  pd.b_diag = VectorXd::Zero(pd.n_act);
  for (int j = 0; j < pd.n_act; ++j) {
    const int c = col_of(j);
    for (int i = 0; i < n_ue; ++i) pd.cone_g(i, j) = stats.a(i, c) * stats.a(i, c);
    for (int k = 0; k < pd.n_tx; ++k) pd.fsq(k, j) = stats.f(k, c) * stats.f(k, c);
    pd.a_diag[j] = stats.a_diag[c];
    pd.b_diag[j] = stats.b_diag[c];
  }
  for (int i = 0; i < n_ue; ++i) pd.cone_g(i, pd.self_col(i)) += stats.b[i] * stats.b[i];

  pd.qinv_eps.resize(n_ue);
  pd.bits_ln2.resize(n_ue);
  for (int i = 0; i < n_ue; ++i) {
    pd.qinv_eps[i] = q_inv(s.urllc[i].dep_threshold);
    pd.bits_ln2[i] = s.urllc[i].packet_bits * std::numbers::ln2;
  }

  pd.l_pilot = s.radio.pilot_length;
  pd.l_cap = max_blocklength(s.urllc, s.sensing, s.radio.bandwidth_hz);
  res.blocklength_cap = pd.l_cap;
  if (pd.l_cap <= pd.l_pilot) {
    res.status = "infeasible:blocklength-cap";
    return res;
  }
  const int l_fixed = opts.blocklength_override;
  if (l_fixed > 0 && (l_fixed <= pd.l_pilot || l_fixed > pd.l_cap)) {
    res.status = "infeasible:blocklength-override";
    return res;
  }

  pd.ops = ops_for(s, detector, pd.has_sensing);
  pd.ops_fixed = pd.ops.ch_est + pd.ops.rzf + pd.ops.zf_sensing + pd.ops.detector_fixed;
  pd.ops_sym = pd.ops.comm_per_symbol + pd.ops.sensing_per_symbol;

  if (pd.has_sensing) {
    const double budget = pd.n_tx * pd.p_tx_max_w;
    pd.s0 = pd.gamma_s * (pd.m * pd.n_rx * pd.noise_w + pd.b_diag.maxCoeff() * budget) +
            3.0 * pd.m * pd.a_diag.maxCoeff() * budget;
    if (!(pd.s0 > 0.0)) pd.s0 = 1.0;
  }

  const bool has_l = l_fixed == 0;
  const double bw = s.radio.bandwidth_hz;
  const double k_t = s.power_model.delta_tr / bw;

  // objective coefficients at a given GPP count
  const auto obj_coeffs = [&](int n_gpp, double* k_l, double* c_obj) {
    const ObjectiveTerms ot = objective_terms(s, pd.ops, n_gpp);
    if (mode == OptimizationMode::tx_only_isac) {
      *k_l = 0.0;
      *c_obj = 0.0;
    } else {
      *k_l = (ot.p_fixed_sum_w + ot.f2_w) / bw;
      *c_obj = (ot.f1_w - pd.l_pilot * ot.f2_w) / bw;
    }
  };

  bool chi0_active = pd.has_sensing;
  Layout lay = make_layout(pd, has_l, chi0_active);
  VectorXd z = cold_init(pd, lay, l_fixed);
  // The GPP count enters the objective only through the fixed-power sum,
  // which the surrogate treats as constant; it is pinned at the blocklength
  // cap for the whole descent (re-evaluating it mid-run steps the objective
  // coefficients and breaks monotonicity). Reports use the exact count at
  // the returned blocklength.
  const int n_gpp = gpp_count_at(pd, has_l ? static_cast<double>(pd.l_cap) : l_fixed, s);

  double f_prev = kInf;
  bool converged = false;
  for (int it = 0; it < opts.max_iterations; ++it) {
    double k_l, c_obj;
    obj_coeffs(n_gpp, &k_l, &c_obj);
    const Linearization lin = linearization_at(pd, lay, z, l_fixed);
    Subproblem sp = build_subproblem(pd, lay, lin, k_l, k_t, c_obj, l_fixed);

    if (max_row_value(sp, z) >= 0.0 || !cones_strict(sp, z)) {
      if (!phase1(sp, z)) {
        if (it > 0) break;  // keep the previous feasible iterate
        // Round zero has no earlier iterate to fall back on; retry once from
        // a certified allocation before declaring the requirements empty.
        bool rescued = feasible_warm_init(pd, s, stats, lay, l_fixed, z);
        if (rescued) {
          const Linearization lin2 = linearization_at(pd, lay, z, l_fixed);
          sp = build_subproblem(pd, lay, lin2, k_l, k_t, c_obj, l_fixed);
          rescued = (max_row_value(sp, z) < 0.0 && cones_strict(sp, z)) || phase1(sp, z);
        }
        if (!rescued) {
          res.status = "infeasible:requirements";
          return res;
        }
      }
    }
    const int n_terms = static_cast<int>(sp.rows.size() + sp.cones.size());
    solve_barrier(sp, z, n_terms);

    const double f = sp.objective(z);
    res.objective_trace_j.push_back(f);
    res.chi0_trace.push_back(chi0_active ? z[lay.ichi0] : 0.0);
    res.iterations = it + 1;

    if (chi0_active && z[lay.ichi0] < opts.slack_zero_tolerance) {
      // slack has collapsed: drop it and enforce the sensing row exactly
      chi0_active = false;
      Layout lay2 = make_layout(pd, has_l, false);
      VectorXd z2 = VectorXd::Zero(lay2.dim);
      z2.segment(lay2.iq, lay2.n_act) = z.segment(lay.iq, lay.n_act);
      z2.segment(lay2.ichi, lay2.n_ue) = z.segment(lay.ichi, lay.n_ue);
      z2.segment(lay2.ir, lay2.n_ue) = z.segment(lay.ir, lay.n_ue);
      if (has_l) {
        z2[lay2.il] = z[lay.il];
        z2[lay2.ilbar] = z[lay.ilbar];
      }
      z2[lay2.it] = z[lay.it];
      lay = lay2;
      z = std::move(z2);
    }

    if (std::abs(f_prev - f) < opts.objective_tolerance_j && !chi0_active) {
      converged = true;
      f_prev = f;
      break;
    }
    f_prev = f;
  }

  if (chi0_active && !res.chi0_trace.empty() &&
      res.chi0_trace.back() >= opts.slack_zero_tolerance) {
    res.status = "infeasible:sensing";
    res.chi0 = res.chi0_trace.back();
    return res;
  }

  // ---- integer exit ----
  VectorXd rho_full = VectorXd::Zero(n_ue + 1);
  for (int j = 0; j < pd.n_act; ++j) {
    const double qj = z[lay.iq + j];
    rho_full[col_of(j)] = qj * qj;
  }
  const double l_cont = has_l ? z[lay.il] : static_cast<double>(l_fixed);

  int best_l = -1;
  double best_c = 1.0, best_e = kInf;
  const auto consider = [&](int l) {
    if (l <= pd.l_pilot || l > pd.l_cap) return;
    const double c = minimal_feasible_scale(pd, s, rho_full, stats, l);
    if (c < 0.0) return;
    const BlocklengthPlan plan{l, pd.l_pilot};
    const VectorXd rho_l = (c * c) * rho_full;
    double e;
    if (mode == OptimizationMode::tx_only_isac)
      e = s.power_model.delta_tr * rho_l.sum() * plan.data_length() / bw;
    else
      e = total_energy(rho_l, plan, s, pd.ops).total_j();
    if (e < best_e - 1e-15 || best_l < 0) {
      best_e = e;
      best_l = l;
      best_c = c;
    }
  };

  if (!opts.integer_blocklength || !has_l) {
    consider(has_l ? static_cast<int>(std::lround(l_cont)) : l_fixed);
  } else {
    const int base = static_cast<int>(std::floor(l_cont));
    int evals = 0;
    for (int off = 0; off <= 31 && evals < 64; ++off) {
      for (const int cand : {base - off, base + 1 + off}) {
        if (cand <= pd.l_pilot || cand > pd.l_cap) continue;
        consider(cand);
        ++evals;
      }
      if (best_l > 0 && off >= 1) break;  // floor/ceil neighborhood settled
    }
  }
  if (best_l < 0) {
    res.status = "infeasible:integer-blocklength";
    return res;
  }

  res.feasible = true;
  res.status = converged ? "converged" : "iteration-limit";
  res.plan = BlocklengthPlan{best_l, pd.l_pilot};
  res.rho_w = (best_c * best_c) * rho_full;
  res.objective_j = f_prev;
  res.chi = z.segment(lay.ichi, n_ue);
  res.chi0 = chi0_active && lay.has_chi0 ? z[lay.ichi0] : 0.0;
  res.lbar = 1.0 / res.plan.data_length();

  res.energy = total_energy(res.rho_w, res.plan, s, pd.ops);
  res.power = total_power(res.rho_w, res.plan, s, pd.ops);
  res.urllc.clear();
  for (int i = 0; i < n_ue; ++i) {
    const double sinr = sinr_dl_lb(res.rho_w, i + 1, stats.b[i], stats.a.row(i).transpose(),
                                   pd.noise_w);
    res.urllc.push_back(urllc_report(sinr, s.urllc[i], res.plan, bw));
  }
  if (s.radio.num_rx_aps > 0)
    res.sensing_sinr = avg_sensing_sinr(res.rho_w.cwiseSqrt(), stats.a_diag, stats.b_diag, pd.m,
                                        s.radio.num_rx_aps, pd.noise_w);
  res.sensing_rate_hz = refreshing_rate(res.plan, bw);
  return res;
}

AvailabilityReport network_availability(const Scenario& s, OptimizationMode mode,
                                        DetectorKind detector, int drops,
                                        const SolveOptions& opts,
                                        const std::optional<std::string>& cache_dir) {
  if (drops < 1) throw std::invalid_argument("network_availability: drops must be >= 1");
  AvailabilityReport rep;
  rep.drops = drops;
  Scenario root = s;
  resolve_scenario(root);
  rep.blocklength_cap = max_blocklength(root.urllc, root.sensing, root.radio.bandwidth_hz);
  for (int d = 0; d < drops; ++d) {
    Scenario sd = root;
    if (d > 0) redraw_ue_positions(sd, static_cast<std::uint64_t>(d));
    const MomentStats stats = load_or_estimate_moments(sd, cache_dir);
    const SolveResult r = solve_allocation(sd, stats, mode, detector, opts);
    if (r.feasible) ++rep.feasible_drops;
  }
  rep.availability = static_cast<double>(rep.feasible_drops) / drops;
  return rep;
}

}  // namespace cfisac
