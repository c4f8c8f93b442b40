#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "freedeconv/measure.hpp"
#include "freedeconv/transform.hpp"

namespace fdc {

using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using LCVec = Eigen::Matrix<std::complex<long double>, Eigen::Dynamic, 1>;
using LCMat = Eigen::Matrix<std::complex<long double>, Eigen::Dynamic, Eigen::Dynamic>;

// Kernel G(z, x) sampled along a fixed ordered contour. A whole column is
// evaluated at once because some kernels are only defined up to a branch that
// must be tracked along the contour. The optional extended-precision column
// is used to factor B-hat when present.
struct Kernel {
  Contour contour;
  Interval domain;
  std::function<CVec(double)> column;
  std::function<LCVec(double)> column_ext;
};

// Maps an eigenvalue of the Krylov operator back to a parameter value.
struct LocationMap {
  double offset = 0.0;
  double scale = 1.0;
  double operator()(double lambda) const { return offset + scale * lambda; }
};

struct EigenmatrixModel {
  Contour contour;
  Interval domain;
  std::vector<double> cheb_nodes;
  CMat bhat;
  CMat M;
  // Operator whose eigenvalues are mapped through `map`; equals M unless the
  // node spectrum was rescaled to [-1, 1].
  CMat krylov_op;
  LocationMap map;
  double threshold_used = 0.0;
  int rank = 0;
  double m_norm = 0.0;
  double bhat_cond = 0.0;
  double model_residual = 0.0;
  std::vector<double> bhat_singular_values;
};

std::vector<double> chebyshev_nodes(Interval X, int n_c);

// Normalized kernel columns at the Chebyshev nodes and their SVD, held in
// extended precision. Produces one eigenmatrix per pseudoinverse threshold
// without refactoring; the returned matrices are rounded to double.
class EigenmatrixBasis {
 public:
  EigenmatrixBasis(const Kernel& kernel, int n_c);

  EigenmatrixModel model(double threshold, bool scaled) const;
  const std::vector<double>& singular_values() const { return sv_; }
  const std::vector<double>& nodes() const { return nodes_; }
  const CMat& bhat() const { return bhat_; }

 private:
  Contour contour_;
  Interval domain_;
  std::vector<double> nodes_;
  CMat bhat_;
  LCMat bhat_ext_;
  LCMat U_;
  LCMat V_;
  std::vector<long double> sv_ext_;
  std::vector<double> sv_;
};

std::vector<double> default_threshold_ladder();

// Smallest ladder threshold whose eigenmatrix satisfies ||M||_2 <= norm_bound.
EigenmatrixModel build_model(const Kernel& kernel, int n_c, double norm_bound, bool scaled = false,
                             const std::vector<double>& ladder = default_threshold_ladder());

// max ||M bhat_x - x bhat_x|| over `points` uniformly spaced x in the domain.
double probe_residual(const EigenmatrixModel& model, const Kernel& kernel, int points = 100);

CMat krylov_matrix(const CMat& M, const CVec& u, int n_l);

struct Rejection {
  cplx eigenvalue;
  std::string reason;
};

struct EspritResult {
  std::vector<double> locations;
  std::vector<Rejection> rejected;
  std::vector<double> singular_values;
  bool degenerate_truncation = false;
};

EspritResult esprit_locations(const CMat& T, int n, Interval X, double im_tol, LocationMap map = {});

struct WeightFit {
  std::vector<cplx> weights;
  cplx offset = 0.0;  // fitted constant term when requested
  double ls_residual = 0.0;
  double condition = 0.0;
};

// Least squares on the unnormalized kernel columns, optionally with a constant
// column for an unknown additive offset.
WeightFit solve_weights(const Kernel& kernel, const std::vector<double>& locations, const CVec& u,
                        bool fit_offset = false);

int estimate_spike_count(const std::vector<double>& t_singular_values, double gap_factor = 1e3);

struct RecoverySolution {
  std::vector<double> locations;
  std::vector<double> weights;
  double ls_residual = 0.0;
  std::vector<double> t_singular_values;
  std::vector<Rejection> rejected;
  double weight_imag_max = 0.0;
  double offset = 0.0;
  std::vector<std::string> warnings;
};

// Krylov matrix, ESPRIT and weight solve for one model.
RecoverySolution recover(const EigenmatrixModel& model, const Kernel& kernel, const CVec& u, int n, int n_l,
                         double im_tol, bool fit_offset = false);

}  // namespace fdc
