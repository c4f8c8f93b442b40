#pragma once

#include <vector>

#include "freedeconv/measure.hpp"

namespace fdc {

struct NewtonConfig {
  double tol = 1e-12;
  int max_iter = 100;
  double damping = 1.0;
  // Number of radial continuation stages: the target g (or t) is approached as
  // g*s for s = 1/K, 2/K, ..., 1, warm-starting each stage from the last. K = 1
  // is plain Newton from the Laurent initialization.
  int continuation_steps = 16;

  void validate() const;
};

struct NewtonStats {
  int iterations = 0;        // summed over all stages
  int final_iterations = 0;  // last stage only
  double residual = 0.0;
};

enum class ContourKind { g_circle, t_circle, xi_ray };

const char* contour_kind_name(ContourKind k);
ContourKind contour_kind_from_name(const std::string& s);

struct Contour {
  ContourKind kind = ContourKind::g_circle;
  std::vector<cplx> points;
  double radius = 0.0;  // circle radius, or xi_max for the ray
  double eps_imag = 0.0;

  // n points at angles 2*pi*(j + 1/2)/n.
  static Contour circle(ContourKind kind, double radius, int n);
  // n points xi_j = j*xi_max/n - i*eps, j = 1..n.
  static Contour xi_ray(double xi_max, int n, double eps_imag);

  std::size_t size() const { return points.size(); }
  void validate() const;
};

template <class M>
cplx invert_stieltjes(const M& m, cplx g, const NewtonConfig& cfg = {}, NewtonStats* stats = nullptr);
template <class M>
cplx r_transform(const M& m, cplx g, const NewtonConfig& cfg = {}, NewtonStats* stats = nullptr);
template <class M>
cplx invert_zg(const M& m, cplx t, const NewtonConfig& cfg = {}, NewtonStats* stats = nullptr);
template <class M>
cplx s_transform(const M& m, cplx t, const NewtonConfig& cfg = {}, NewtonStats* stats = nullptr);

// Logarithms continuous along the sequence, starting on the principal branch.
std::vector<cplx> log_branch_track(const std::vector<cplx>& values);

// Extended-precision variants for atomic measures, used when building
// eigenmatrices. Newton runs to a residual of min(cfg.tol, 1e-17).
using lcplx = std::complex<long double>;
lcplx r_transform_ext(const AtomicMeasure& m, lcplx g, const NewtonConfig& cfg = {});
lcplx s_transform_ext(const AtomicMeasure& m, lcplx t, const NewtonConfig& cfg = {});
lcplx char_fn_ext(const AtomicMeasure& m, lcplx xi);
std::vector<lcplx> log_branch_track_ext(const std::vector<lcplx>& values);

// Radius of the largest disc around 0 on which z(g) (resp. z(t)) is analytic,
// bounded below by the smallest critical value of g (resp. z*g - 1). For the
// t map the pole of log s at t = -1 is included.
double stieltjes_branch_radius(const AtomicMeasure& m);
double zg_branch_radius(const AtomicMeasure& m);

}  // namespace fdc
