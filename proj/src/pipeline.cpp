#include "freedeconv/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <sstream>

namespace fdc {

const char* selection_name(Selection s) { return s == Selection::norm_rule ? "norm_rule" : "residual"; }

Selection selection_from_name(const std::string& s) {
  if (s == "norm_rule") return Selection::norm_rule;
  if (s == "residual") return Selection::residual;
  throw Error(ErrorCode::InvalidArgument, "unknown selection '" + s + "'");
}

void SolverConfig::validate() const {
  if (radius && !(*radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "solver.radius must be > 0");
  if (!(radius_fraction > 0.0 && radius_fraction < 1.0))
    throw Error(ErrorCode::InvalidArgument, "solver.radius_fraction must be in (0,1)");
  if (!(xi_scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "solver.xi_scale must be > 0");
  if (!(eps_imag >= 0.0)) throw Error(ErrorCode::InvalidArgument, "solver.eps_imag must be >= 0");
  if (n_z < 2) throw Error(ErrorCode::InvalidArgument, "solver.n_z must be >= 2");
  if (n_c < 2) throw Error(ErrorCode::InvalidArgument, "solver.n_c must be >= 2");
  if (n_l && *n_l < 1) throw Error(ErrorCode::InvalidArgument, "solver.n_l must be >= 1");
  if (norm_bound && !(*norm_bound > 0.0)) throw Error(ErrorCode::InvalidArgument, "solver.norm_bound must be > 0");
  if (!(im_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "solver.im_tol must be > 0");
  if (!(gap_factor > 1.0)) throw Error(ErrorCode::InvalidArgument, "solver.gap_factor must be > 1");
  newton.validate();
}

double default_norm_bound(const ParametricFamily& family) {
  const Interval X = family.domain();
  return 1e5 * std::max(std::abs(X.lo), std::abs(X.hi));
}

Contour default_contour(Mode mode, const ParametricFamily& family, const SolverConfig& cfg) {
  if (mode == Mode::classical) {
    const double xi_max = cfg.radius ? *cfg.radius : cfg.xi_scale / family.spectral_scale();
    return Contour::xi_ray(xi_max, cfg.n_z, cfg.eps_imag);
  }
  const ContourKind kind = mode == Mode::additive ? ContourKind::g_circle : ContourKind::t_circle;
  if (cfg.radius) return Contour::circle(kind, *cfg.radius, cfg.n_z);
  const Interval X = family.domain();
  double r = INFINITY;
  for (int i = 0; i <= 128; ++i) {
    const AtomicMeasure m = family(X.lo + X.width() * i / 128);
    r = std::min(r, mode == Mode::additive ? stieltjes_branch_radius(m) : zg_branch_radius(m));
  }
  if (!std::isfinite(r)) r = 1.0;
  return Contour::circle(kind, cfg.radius_fraction * r, cfg.n_z);
}

namespace {

void check_contour(const Contour& c, ContourKind kind) {
  if (c.kind != kind)
    throw Error(ErrorCode::InvalidArgument, std::string("expected a ") + contour_kind_name(kind) + " contour");
}

template <class M>
CVec additive_column(const M& m, const Contour& c, const NewtonConfig& cfg) {
  CVec out(c.size());
  for (std::size_t j = 0; j < c.size(); ++j) out[j] = r_transform(m, c.points[j], cfg);
  return out;
}

template <class M>
CVec multiplicative_column(const M& m, const Contour& c, const NewtonConfig& cfg) {
  std::vector<cplx> s(c.size());
  for (std::size_t j = 0; j < c.size(); ++j) s[j] = s_transform(m, c.points[j], cfg);
  const std::vector<cplx> l = log_branch_track(s);
  return Eigen::Map<const CVec>(l.data(), static_cast<Eigen::Index>(l.size()));
}

template <class M>
CVec classical_column(const M& m, const Contour& c) {
  std::vector<cplx> v(c.size());
  for (std::size_t j = 0; j < c.size(); ++j) v[j] = char_fn(m, c.points[j]);
  const std::vector<cplx> l = log_branch_track(v);
  return Eigen::Map<const CVec>(l.data(), static_cast<Eigen::Index>(l.size()));
}

LCVec additive_column_ext(const AtomicMeasure& m, const Contour& c, const NewtonConfig& cfg) {
  LCVec out(c.size());
  for (std::size_t j = 0; j < c.size(); ++j) out[j] = r_transform_ext(m, lcplx(c.points[j]), cfg);
  return out;
}

LCVec multiplicative_column_ext(const AtomicMeasure& m, const Contour& c, const NewtonConfig& cfg) {
  std::vector<lcplx> s(c.size());
  for (std::size_t j = 0; j < c.size(); ++j) s[j] = s_transform_ext(m, lcplx(c.points[j]), cfg);
  const std::vector<lcplx> l = log_branch_track_ext(s);
  return Eigen::Map<const LCVec>(l.data(), static_cast<Eigen::Index>(l.size()));
}

LCVec classical_column_ext(const AtomicMeasure& m, const Contour& c) {
  std::vector<lcplx> v(c.size());
  for (std::size_t j = 0; j < c.size(); ++j) v[j] = char_fn_ext(m, lcplx(c.points[j]));
  const std::vector<lcplx> l = log_branch_track_ext(v);
  return Eigen::Map<const LCVec>(l.data(), static_cast<Eigen::Index>(l.size()));
}

}  // namespace

Kernel make_kernel(Mode mode, const ParametricFamily& family, const Contour& contour, const NewtonConfig& cfg) {
  Kernel k;
  k.contour = contour;
  k.domain = family.domain();
  switch (mode) {
    case Mode::classical:
      check_contour(contour, ContourKind::xi_ray);
      k.column = [family, contour](double x) { return classical_column(family(x), contour); };
      k.column_ext = [family, contour](double x) { return classical_column_ext(family(x), contour); };
      break;
    case Mode::additive:
      check_contour(contour, ContourKind::g_circle);
      k.column = [family, contour, cfg](double x) { return additive_column(family(x), contour, cfg); };
      k.column_ext = [family, contour, cfg](double x) { return additive_column_ext(family(x), contour, cfg); };
      break;
    case Mode::multiplicative:
      check_contour(contour, ContourKind::t_circle);
      k.column = [family, contour, cfg](double x) { return multiplicative_column(family(x), contour, cfg); };
      k.column_ext = [family, contour, cfg](double x) {
        return multiplicative_column_ext(family(x), contour, cfg);
      };
      break;
  }
  return k;
}

CVec observation_classical(const EmpiricalSpectrum& s, const Contour& contour) {
  check_contour(contour, ContourKind::xi_ray);
  return classical_column(s, contour);
}

CVec observation_additive(const EmpiricalSpectrum& s, const Contour& contour, const NewtonConfig& cfg) {
  check_contour(contour, ContourKind::g_circle);
  return additive_column(s, contour, cfg);
}

CVec observation_multiplicative(const EmpiricalSpectrum& s, const Contour& contour, const NewtonConfig& cfg) {
  check_contour(contour, ContourKind::t_circle);
  if (s.values().front() <= 0.0) throw Error(ErrorCode::NonPositiveMeasure, "spectrum must be positive");
  return multiplicative_column(s, contour, cfg);
}

CVec observation(Mode mode, const EmpiricalSpectrum& s, const Contour& contour, const NewtonConfig& cfg) {
  switch (mode) {
    case Mode::classical: return observation_classical(s, contour);
    case Mode::additive: return observation_additive(s, contour, cfg);
    case Mode::multiplicative: return observation_multiplicative(s, contour, cfg);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown mode");
}

CVec forward_oracle(Mode mode, const ParametricFamily& family, const std::vector<double>& xs, const Contour& contour,
                    const NewtonConfig& cfg) {
  const Kernel k = make_kernel(mode, family, contour, cfg);
  LCVec u = LCVec::Zero(static_cast<Eigen::Index>(contour.size()));
  for (double x : xs) {
    if (!family.domain().contains(x)) {
      std::ostringstream os;
      os << "parameter " << x << " lies outside [" << family.domain().lo << ", " << family.domain().hi << "]";
      throw Error(ErrorCode::InvalidArgument, os.str());
    }
    u += k.column_ext(x);
  }
  return u.cast<cplx>();
}

namespace {

template <class V>
V centered(const V& v) {
  return (v.array() - v.mean()).matrix();
}

struct Ladder {
  Kernel kernel;  // column-centered when fitting an unknown offset
  std::unique_ptr<EigenmatrixBasis> basis;
  std::vector<double> thresholds;
  std::vector<EigenmatrixModel> raw;
  std::vector<EigenmatrixModel> scaled;
};

std::string family_signature(const ParametricFamily& f) {
  if (!f.lf_atoms()) return {};
  std::ostringstream os;
  os.precision(17);
  os << f.name() << '[' << f.domain().lo << ',' << f.domain().hi << ']';
  for (const auto& a : *f.lf_atoms())
    os << a.weight << ':' << a.coef[0] << ',' << a.coef[1] << ',' << a.coef[2] << ',' << a.coef[3] << ';';
  return os.str();
}

std::string cache_key(Mode mode, const ParametricFamily& family, const Contour& c, const SolverConfig& cfg) {
  const std::string sig = family_signature(family);
  if (sig.empty()) return {};
  std::ostringstream os;
  os.precision(17);
  os << mode_name(mode) << '|' << sig << '|' << contour_kind_name(c.kind) << '|' << c.radius << '|' << c.eps_imag << '|'
     << c.size() << '|' << cfg.n_c << '|' << cfg.affine_offset << '|' << cfg.newton.tol << '|' << cfg.newton.max_iter
     << '|' << cfg.newton.damping << '|' << cfg.newton.continuation_steps;
  return os.str();
}

std::shared_mutex g_cache_mutex;
std::map<std::string, std::shared_ptr<const Ladder>> g_cache;

std::shared_ptr<const Ladder> build_ladder(Mode mode, const ParametricFamily& family, const Contour& contour,
                                           const SolverConfig& cfg) {
  auto lad = std::make_shared<Ladder>();
  lad->kernel = make_kernel(mode, family, contour, cfg.newton);
  if (cfg.affine_offset) {
    auto base = lad->kernel.column;
    auto base_ext = lad->kernel.column_ext;
    lad->kernel.column = [base](double x) { return centered(base(x)); };
    lad->kernel.column_ext = [base_ext](double x) { return centered(base_ext(x)); };
  }
  lad->basis = std::make_unique<EigenmatrixBasis>(lad->kernel, cfg.n_c);
  lad->thresholds = default_threshold_ladder();
  for (double th : lad->thresholds) {
    lad->raw.push_back(lad->basis->model(th, false));
    lad->scaled.push_back(lad->basis->model(th, true));
  }
  return lad;
}

std::shared_ptr<const Ladder> get_ladder(Mode mode, const ParametricFamily& family, const Contour& contour,
                                         const SolverConfig& cfg) {
  const std::string key = cache_key(mode, family, contour, cfg);
  if (!key.empty()) {
    std::shared_lock lock(g_cache_mutex);
    auto it = g_cache.find(key);
    if (it != g_cache.end()) return it->second;
  }
  auto lad = build_ladder(mode, family, contour, cfg);
  if (!key.empty()) {
    std::unique_lock lock(g_cache_mutex);
    g_cache[key] = lad;
  }
  return lad;
}

std::vector<int> krylov_lengths(int n, const SolverConfig& cfg) {
  if (cfg.n_l) return {std::max(*cfg.n_l, n)};
  const int def = std::max(2 * n + 2, 12);
  if (cfg.selection == Selection::norm_rule) return {def};
  std::vector<int> v{n + 1, 2 * n + 2, def};
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

void clear_model_cache() {
  std::unique_lock lock(g_cache_mutex);
  g_cache.clear();
}

std::size_t model_cache_size() {
  std::shared_lock lock(g_cache_mutex);
  return g_cache.size();
}

EigenmatrixModel default_model(Mode mode, const ParametricFamily& family, const SolverConfig& cfg) {
  cfg.validate();
  const Contour contour = default_contour(mode, family, cfg);
  const auto lad = get_ladder(mode, family, contour, cfg);
  const double bound = cfg.norm_bound ? *cfg.norm_bound : default_norm_bound(family);
  for (const auto& m : lad->raw)
    if (m.m_norm <= bound) return m;
  throw Error(ErrorCode::NormBoundUnreachable, "no threshold in the ladder satisfies the norm bound");
}

DeconvReport deconvolve(const DeconvProblem& problem) {
  const auto t0 = std::chrono::steady_clock::now();
  const SolverConfig& cfg = problem.solver;
  cfg.validate();
  check_normalization(problem.family, problem.mode);
  if (problem.n < 0) throw Error(ErrorCode::InvalidArgument, "spike count must be >= 0");

  DeconvReport rep;
  rep.contour = default_contour(problem.mode, problem.family, cfg);
  const auto lad = get_ladder(problem.mode, problem.family, rep.contour, cfg);
  const Kernel base_kernel = make_kernel(problem.mode, problem.family, rep.contour, cfg.newton);

  if (const auto* s = std::get_if<EmpiricalSpectrum>(&problem.observed)) {
    rep.observation = observation(problem.mode, *s, rep.contour, cfg.newton);
    // Built-in normalizations fix the first moment of the observed law; the
    // finite-N sample deviates by a known constant in u.
    if (cfg.center && problem.mode == Mode::additive) {
      rep.diagnostics.observation_offset = moment(*s, 1);
    } else if (cfg.center && problem.mode == Mode::multiplicative) {
      rep.diagnostics.observation_offset = -std::log(moment(*s, 1));
    }
    rep.observation.array() -= rep.diagnostics.observation_offset;
  } else {
    rep.observation = std::get<CVec>(problem.observed);
    if (rep.observation.size() != static_cast<Eigen::Index>(rep.contour.size()))
      throw Error(ErrorCode::InvalidArgument, "observation length does not match the contour");
  }
  const CVec u_model = cfg.affine_offset ? centered(rep.observation) : rep.observation;

  ModelDiagnostics& dg = rep.diagnostics;
  dg.norm_bound = cfg.norm_bound ? *cfg.norm_bound : default_norm_bound(problem.family);
  std::vector<std::size_t> admissible;
  for (std::size_t i = 0; i < lad->raw.size(); ++i)
    if (lad->raw[i].m_norm <= dg.norm_bound) admissible.push_back(i);
  if (admissible.empty()) {
    std::ostringstream os;
    os << "no threshold in the ladder gives ||M|| <= " << dg.norm_bound;
    throw Error(ErrorCode::NormBoundUnreachable, os.str());
  }
  const EigenmatrixModel& rule = lad->raw[admissible.front()];
  dg.threshold_used = rule.threshold_used;
  dg.rank = rule.rank;
  dg.m_norm = rule.m_norm;
  dg.bhat_cond = rule.bhat_cond;
  dg.model_residual = rule.model_residual;

  int n = problem.n;
  if (n == 0) {
    const CMat T = krylov_matrix(rule.krylov_op, u_model, 12);
    Eigen::JacobiSVD<CMat> svd(T);
    std::vector<double> sv(svd.singularValues().data(), svd.singularValues().data() + svd.singularValues().size());
    n = estimate_spike_count(sv, cfg.gap_factor);
    dg.gap_ratio = sv[n - 1] / sv[n];
  }

  struct Cand {
    const EigenmatrixModel* model;
    bool scaled;
    int n_l;
  };
  std::vector<Cand> cands;
  const std::vector<int> lengths = krylov_lengths(n, cfg);
  if (cfg.selection == Selection::norm_rule) {
    cands.push_back({&rule, false, lengths.front()});
  } else {
    for (std::size_t i : admissible)
      for (int s = 0; s < 2; ++s)
        for (int nl : lengths) cands.push_back({s ? &lad->scaled[i] : &lad->raw[i], s == 1, nl});
  }

  double best = INFINITY;
  const Cand* chosen = nullptr;
  EspritResult chosen_es;
  std::optional<Error> first_error;
  for (const Cand& c : cands) {
    ++dg.candidates_tried;
    try {
      const CMat T = krylov_matrix(c.model->krylov_op, u_model, c.n_l);
      EspritResult es = esprit_locations(T, n, problem.family.domain(), cfg.im_tol, c.model->map);
      CVec fit = -u_model;
      for (double x : es.locations) fit += lad->kernel.column(x);
      const double r = fit.norm();
      if (std::isfinite(r) && r < best) {
        best = r;
        chosen = &c;
        chosen_es = std::move(es);
      }
    } catch (const Error& e) {
      ++dg.candidates_failed;
      if (!first_error) first_error = e;
    }
  }
  if (!chosen) throw *first_error;
  dg.selected_threshold = chosen->model->threshold_used;
  dg.selected_scaled = chosen->scaled;
  dg.selected_n_l = chosen->n_l;
  dg.selected_m_norm = chosen->model->m_norm;
  dg.selection_residual = best;

  RecoverySolution& sol = rep.solution;
  sol.locations = chosen_es.locations;
  sol.rejected = chosen_es.rejected;
  sol.t_singular_values = chosen_es.singular_values;
  if (chosen_es.degenerate_truncation) sol.warnings.push_back("DegenerateTruncation");
  const WeightFit wf = solve_weights(base_kernel, sol.locations, rep.observation, cfg.affine_offset);
  sol.ls_residual = wf.ls_residual;
  sol.offset = wf.offset.real();
  for (std::size_t k = 0; k < wf.weights.size(); ++k) {
    const double w = wf.weights[k].real(), im = std::abs(wf.weights[k].imag());
    sol.weights.push_back(w);
    sol.weight_imag_max = std::max(sol.weight_imag_max, im);
    std::ostringstream os;
    if (im > cfg.im_tol) {
      os << "WeightImaginary: weight " << k << " has imaginary part " << im;
      sol.warnings.push_back(os.str());
    } else if (std::abs(w - 1.0) > 0.2) {
      os << "WeightOffContract: weight " << k << " = " << w << " differs from 1 by more than 0.2";
      sol.warnings.push_back(os.str());
    }
  }
  for (std::size_t k = 1; k < sol.locations.size(); ++k)
    if (sol.locations[k] - sol.locations[k - 1] < 1e-6 * problem.family.domain().width()) {
      sol.warnings.push_back("DuplicateLocations");
      break;
    }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace fdc
