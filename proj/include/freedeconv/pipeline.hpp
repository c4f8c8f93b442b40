#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "freedeconv/eigenmatrix.hpp"
#include "freedeconv/measure.hpp"
#include "freedeconv/transform.hpp"

namespace fdc {

enum class Selection {
  // Only the model picked by the norm rule, with the default Krylov length.
  norm_rule,
  // Every admissible (threshold, spectrum scaling, n_l) candidate; keep the
  // one whose recovered spikes best reproduce the observation.
  residual,
};

const char* selection_name(Selection s);
Selection selection_from_name(const std::string& s);

struct SolverConfig {
  // Explicit contour size: circle radius, or xi_max for the ray.
  std::optional<double> radius;
  // Circle radius as a fraction of the family's branch radius.
  double radius_fraction = 0.95;
  // xi_max = xi_scale / (largest |atom| over the family) for the ray.
  double xi_scale = 3.0;
  double eps_imag = 1e-6;
  int n_z = 64;
  int n_c = 32;
  std::optional<int> n_l;
  std::optional<double> norm_bound;
  double im_tol = 0.05;
  NewtonConfig newton;
  // Remove the sample first moment from empirical observations (matrix modes).
  bool center = true;
  // Fit u ~ c0 + sum_k G(z, x_k) with unknown c0.
  bool affine_offset = false;
  Selection selection = Selection::residual;
  double gap_factor = 1e3;

  void validate() const;
};

// ||M||_2 bound used when none is configured.
double default_norm_bound(const ParametricFamily& family);

Contour default_contour(Mode mode, const ParametricFamily& family, const SolverConfig& cfg);

// G(xi, x) = log rho_x^(xi), G(g, x) = r_{rho_x}(g), or G(t, x) = log s_{rho_x}(t).
Kernel make_kernel(Mode mode, const ParametricFamily& family, const Contour& contour, const NewtonConfig& cfg);

CVec observation_classical(const EmpiricalSpectrum& s, const Contour& contour);
CVec observation_additive(const EmpiricalSpectrum& s, const Contour& contour, const NewtonConfig& cfg);
CVec observation_multiplicative(const EmpiricalSpectrum& s, const Contour& contour, const NewtonConfig& cfg);
CVec observation(Mode mode, const EmpiricalSpectrum& s, const Contour& contour, const NewtonConfig& cfg);

// Noiseless large-N observation sum_k G(z_j, x_k).
CVec forward_oracle(Mode mode, const ParametricFamily& family, const std::vector<double>& xs, const Contour& contour,
                    const NewtonConfig& cfg);

struct DeconvProblem {
  Mode mode;
  ParametricFamily family;
  std::variant<EmpiricalSpectrum, CVec> observed;
  int n = 0;  // 0 selects the spike count from the Krylov singular values
  SolverConfig solver;
};

struct ModelDiagnostics {
  double norm_bound = 0.0;
  double threshold_used = 0.0;  // norm-rule model
  int rank = 0;
  double m_norm = 0.0;
  double bhat_cond = 0.0;
  double model_residual = 0.0;
  double selected_threshold = 0.0;
  bool selected_scaled = false;
  int selected_n_l = 0;
  double selected_m_norm = 0.0;
  double selection_residual = 0.0;
  int candidates_tried = 0;
  int candidates_failed = 0;
  double observation_offset = 0.0;
  std::optional<double> gap_ratio;
};

struct DeconvReport {
  RecoverySolution solution;
  CVec observation;
  Contour contour;
  ModelDiagnostics diagnostics;
  double seconds = 0.0;
};

DeconvReport deconvolve(const DeconvProblem& problem);

// Eigenmatrix built with the norm rule for the problem's kernel; shares the
// model cache with deconvolve.
EigenmatrixModel default_model(Mode mode, const ParametricFamily& family, const SolverConfig& cfg);

void clear_model_cache();
std::size_t model_cache_size();

}  // namespace fdc
