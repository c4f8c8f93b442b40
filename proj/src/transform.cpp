#include "freedeconv/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/Polynomials>

namespace fdc {

void NewtonConfig::validate() const {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "newton.tol must be > 0");
  if (max_iter < 1) throw Error(ErrorCode::InvalidArgument, "newton.max_iter must be >= 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw Error(ErrorCode::InvalidArgument, "newton.damping must be in (0,1]");
  if (continuation_steps < 1) throw Error(ErrorCode::InvalidArgument, "newton.continuation_steps must be >= 1");
}

const char* contour_kind_name(ContourKind k) {
  switch (k) {
    case ContourKind::g_circle: return "g_circle";
    case ContourKind::t_circle: return "t_circle";
    case ContourKind::xi_ray: return "xi_ray";
  }
  return "?";
}

ContourKind contour_kind_from_name(const std::string& s) {
  if (s == "g_circle") return ContourKind::g_circle;
  if (s == "t_circle") return ContourKind::t_circle;
  if (s == "xi_ray") return ContourKind::xi_ray;
  throw Error(ErrorCode::InvalidArgument, "unknown contour kind '" + s + "'");
}

Contour Contour::circle(ContourKind kind, double radius, int n) {
  if (kind == ContourKind::xi_ray) throw Error(ErrorCode::InvalidArgument, "circle() needs a circle kind");
  if (n < 1 || !(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "circle needs n >= 1 and radius > 0");
  Contour c;
  c.kind = kind;
  c.radius = radius;
  c.points.reserve(n);
  for (int j = 0; j < n; ++j) c.points.push_back(std::polar(radius, 2.0 * std::numbers::pi * (j + 0.5) / n));
  return c;
}

Contour Contour::xi_ray(double xi_max, int n, double eps_imag) {
  if (n < 1 || !(xi_max > 0.0) || !(eps_imag >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "xi ray needs n >= 1, xi_max > 0, eps >= 0");
  Contour c;
  c.kind = ContourKind::xi_ray;
  c.radius = xi_max;
  c.eps_imag = eps_imag;
  c.points.reserve(n);
  for (int j = 1; j <= n; ++j) c.points.emplace_back(xi_max * j / n, -eps_imag);
  return c;
}

void Contour::validate() const {
  if (points.empty()) throw Error(ErrorCode::InvalidArgument, "contour has no points");
  if (kind == ContourKind::xi_ray) {
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (points[j].imag() != -eps_imag) throw Error(ErrorCode::InvalidArgument, "xi ray points must share Im = -eps");
      if (j > 0 && !(points[j].real() > points[j - 1].real()))
        throw Error(ErrorCode::InvalidArgument, "xi ray real parts must increase");
    }
  } else {
    for (cplx p : points)
      if (p == 0.0 || std::abs(std::abs(p) - radius) > 1e-14 * std::max(1.0, radius))
        throw Error(ErrorCode::InvalidArgument, "circle points must lie on the radius and avoid 0");
  }
}

namespace {

// Damped Newton for a scalar analytic equation f(z) = 0. `eval` returns
// (f, f') and may throw DivisionNearPole.
template <class C, class Eval>
C newton_solve(Eval eval, C z, const NewtonConfig& cfg, double tol, int& iters, double& resid) {
  using R = typename C::value_type;
  auto safe = [&](C w, C& f, C& df) {
    try {
      auto [a, b] = eval(w);
      f = a;
      df = b;
      return std::isfinite(std::abs(f)) && std::isfinite(std::abs(df));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DivisionNearPole) return false;
      throw;
    }
  };
  C f, df;
  if (!safe(z, f, df)) throw Error(ErrorCode::PoleCollision, "Newton start lies on an atom");
  const double r0 = static_cast<double>(std::abs(f));
  iters = 0;
  for (;;) {
    resid = static_cast<double>(std::abs(f));
    if (resid <= tol) return z;
    if (iters >= cfg.max_iter) break;
    if (resid > 10.0 * std::max(r0, tol)) break;
    if (df == C(0)) break;
    const C dz = -f / df;
    R lam = static_cast<R>(cfg.damping);
    C best_z = z, best_f = f, best_df = df;
    double best_r = INFINITY;
    bool any = false;
    for (int h = 0; h <= 20; ++h, lam *= R(0.5)) {
      C zn = z + lam * dz, fn, dfn;
      if (!safe(zn, fn, dfn)) continue;
      const double rn = static_cast<double>(std::abs(fn));
      if (rn < best_r) {
        best_r = rn;
        best_z = zn;
        best_f = fn;
        best_df = dfn;
        any = true;
      }
      if (rn < resid) break;
    }
    ++iters;
    if (!any) throw Error(ErrorCode::PoleCollision, "Newton iterate collided with an atom");
    z = best_z;
    f = best_f;
    df = best_df;
  }
  std::ostringstream os;
  os << "no convergence after " << iters << " iterations, residual " << resid;
  throw Error(ErrorCode::NewtonDiverged, os.str());
}

// Stieltjes pair of an atomic measure in extended precision.
struct ExtAtoms {
  const AtomicMeasure& m;
};

std::pair<lcplx, lcplx> pair_of(const ExtAtoms& a, lcplx z) {
  lcplx g = 0, dg = 0;
  long double dist = INFINITY;
  for (const Atom& at : a.m.atoms()) {
    const lcplx d = z - static_cast<long double>(at.location);
    dist = std::min(dist, std::abs(d));
    const lcplx inv = 1.0L / d;
    g += static_cast<long double>(at.weight) * inv;
    dg -= static_cast<long double>(at.weight) * inv * inv;
  }
  if (dist < 1e-14L * (1.0L + std::abs(z))) throw Error(ErrorCode::DivisionNearPole, "z is on an atom");
  return {g, dg};
}

template <class M>
std::pair<cplx, cplx> pair_of(const M& m, cplx z) {
  const StieltjesPair p = stieltjes_pair(m, z);
  return {p.g, p.dg};
}

long double first_moment(const ExtAtoms& a) {
  long double s = 0;
  for (const Atom& at : a.m.atoms()) s += static_cast<long double>(at.weight) * static_cast<long double>(at.location);
  return s;
}

template <class M>
double first_moment(const M& m) {
  return moment(m, 1);
}

template <class M, class C>
C invert_stieltjes_impl(const M& m, C g, const NewtonConfig& cfg, double tol, NewtonStats* stats) {
  using R = typename C::value_type;
  if (g == C(0)) throw Error(ErrorCode::InvalidArgument, "invert_stieltjes needs g != 0");
  const R m1 = first_moment(m);
  const int K = cfg.continuation_steps;
  NewtonStats st;
  C z = 0, g_prev = 0;
  for (int k = 1; k <= K; ++k) {
    const C gk = g * (static_cast<R>(k) / K);
    const C z0 = k == 1 ? R(1) / gk + m1 : z + (R(1) / gk - R(1) / g_prev);
    auto eval = [&](C w) {
      auto [gw, dgw] = pair_of(m, w);
      return std::pair<C, C>(gw - gk, dgw);
    };
    z = newton_solve(eval, z0, cfg, tol, st.final_iterations, st.residual);
    st.iterations += st.final_iterations;
    g_prev = gk;
  }
  if (stats) *stats = st;
  return z;
}

template <class M, class C>
C invert_zg_impl(const M& m, C t, const NewtonConfig& cfg, double tol, NewtonStats* stats) {
  using R = typename C::value_type;
  if (t == C(0)) throw Error(ErrorCode::InvalidArgument, "invert_zg needs t != 0");
  const R m1 = first_moment(m);
  if (std::abs(m1) < R(1e-300)) throw Error(ErrorCode::ZeroFirstMoment, "first moment is zero");
  const int K = cfg.continuation_steps;
  NewtonStats st;
  C z = 0;
  for (int k = 1; k <= K; ++k) {
    const C tk = t * (static_cast<R>(k) / K);
    const C z0 = k == 1 ? m1 / tk : z * (static_cast<R>(k - 1) / k);
    auto eval = [&](C w) {
      auto [gw, dgw] = pair_of(m, w);
      return std::pair<C, C>(w * gw - (tk + R(1)), gw + w * dgw);
    };
    z = newton_solve(eval, z0, cfg, tol, st.final_iterations, st.residual);
    st.iterations += st.final_iterations;
  }
  if (stats) *stats = st;
  return z;
}

template <class C>
std::vector<C> log_track_impl(const std::vector<C>& values) {
  using R = typename C::value_type;
  std::vector<C> out;
  out.reserve(values.size());
  R phase = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const C v = values[i];
    if (v == C(0) || !std::isfinite(std::abs(v))) throw Error(ErrorCode::ZeroValue, "log of zero or non-finite value");
    if (i == 0) {
      phase = std::arg(v);
    } else {
      const R d = std::arg(v / values[i - 1]);
      if (std::abs(d) >= std::numbers::pi_v<R> * (R(1) - R(1e-12))) {
        std::ostringstream os;
        os << "phase gap of pi between samples " << i - 1 << " and " << i;
        throw Error(ErrorCode::BranchJump, os.str());
      }
      phase += d;
    }
    out.emplace_back(std::log(std::abs(v)), phase);
  }
  return out;
}

constexpr double kExtTol = 1e-17;

}  // namespace

template <class M>
cplx invert_stieltjes(const M& m, cplx g, const NewtonConfig& cfg, NewtonStats* stats) {
  return invert_stieltjes_impl(m, g, cfg, cfg.tol, stats);
}

template <class M>
cplx r_transform(const M& m, cplx g, const NewtonConfig& cfg, NewtonStats* stats) {
  return invert_stieltjes(m, g, cfg, stats) - 1.0 / g;
}

template <class M>
cplx invert_zg(const M& m, cplx t, const NewtonConfig& cfg, NewtonStats* stats) {
  return invert_zg_impl(m, t, cfg, cfg.tol, stats);
}

template <class M>
cplx s_transform(const M& m, cplx t, const NewtonConfig& cfg, NewtonStats* stats) {
  const cplx z = invert_zg(m, t, cfg, stats);
  return (t + 1.0) / (t * z);
}

template cplx invert_stieltjes(const AtomicMeasure&, cplx, const NewtonConfig&, NewtonStats*);
template cplx invert_stieltjes(const EmpiricalSpectrum&, cplx, const NewtonConfig&, NewtonStats*);
template cplx r_transform(const AtomicMeasure&, cplx, const NewtonConfig&, NewtonStats*);
template cplx r_transform(const EmpiricalSpectrum&, cplx, const NewtonConfig&, NewtonStats*);
template cplx invert_zg(const AtomicMeasure&, cplx, const NewtonConfig&, NewtonStats*);
template cplx invert_zg(const EmpiricalSpectrum&, cplx, const NewtonConfig&, NewtonStats*);
template cplx s_transform(const AtomicMeasure&, cplx, const NewtonConfig&, NewtonStats*);
template cplx s_transform(const EmpiricalSpectrum&, cplx, const NewtonConfig&, NewtonStats*);

lcplx r_transform_ext(const AtomicMeasure& m, lcplx g, const NewtonConfig& cfg) {
  return invert_stieltjes_impl(ExtAtoms{m}, g, cfg, std::min(cfg.tol, kExtTol), nullptr) - 1.0L / g;
}

lcplx s_transform_ext(const AtomicMeasure& m, lcplx t, const NewtonConfig& cfg) {
  const lcplx z = invert_zg_impl(ExtAtoms{m}, t, cfg, std::min(cfg.tol, kExtTol), nullptr);
  return (t + 1.0L) / (t * z);
}

lcplx char_fn_ext(const AtomicMeasure& m, lcplx xi) {
  const lcplx mi(0.0L, -1.0L);
  lcplx sum = 0;
  for (const Atom& a : m.atoms())
    sum += static_cast<long double>(a.weight) * std::exp(mi * static_cast<long double>(a.location) * xi);
  return sum;
}

std::vector<lcplx> log_branch_track_ext(const std::vector<lcplx>& values) { return log_track_impl(values); }

std::vector<cplx> log_branch_track(const std::vector<cplx>& values) { return log_track_impl(values); }

namespace {

using Poly = Eigen::VectorXd;  // ascending coefficients

Poly poly_mul(const Poly& a, const Poly& b) {
  Poly c = Poly::Zero(a.size() + b.size() - 1);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    for (Eigen::Index j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

// Roots of sum_i c_i prod_{j != i} (z - l_j)^2.
std::vector<cplx> weighted_square_roots(const std::vector<Atom>& atoms, const std::vector<double>& c) {
  const std::size_t m = atoms.size();
  if (m < 2) return {};
  Poly total = Poly::Zero(2 * m - 1);
  for (std::size_t i = 0; i < m; ++i) {
    Poly p = Poly::Constant(1, c[i]);
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      Poly q(3);
      q << atoms[j].location * atoms[j].location, -2.0 * atoms[j].location, 1.0;
      p = poly_mul(p, q);
    }
    total.head(p.size()) += p;
  }
  Eigen::Index deg = total.size() - 1;
  while (deg > 0 && std::abs(total[deg]) < 1e-300) --deg;
  if (deg < 1) return {};
  Eigen::PolynomialSolver<double, Eigen::Dynamic> solver(total.head(deg + 1));
  std::vector<cplx> r;
  for (Eigen::Index k = 0; k < solver.roots().size(); ++k) r.push_back(solver.roots()[k]);
  return r;
}

}  // namespace

double stieltjes_branch_radius(const AtomicMeasure& m) {
  std::vector<double> c;
  for (const Atom& a : m.atoms()) c.push_back(a.weight);
  double r = INFINITY;
  for (cplx z : weighted_square_roots(m.atoms(), c)) {
    try {
      r = std::min(r, std::abs(stieltjes(m, z)));
    } catch (const Error&) {
    }
  }
  return r;
}

double zg_branch_radius(const AtomicMeasure& m) {
  std::vector<double> c;
  for (const Atom& a : m.atoms()) c.push_back(a.weight * a.location);
  double r = 1.0;
  for (cplx z : weighted_square_roots(m.atoms(), c)) {
    try {
      r = std::min(r, std::abs(z * stieltjes(m, z) - 1.0));
    } catch (const Error&) {
    }
  }
  return r;
}

}  // namespace fdc
