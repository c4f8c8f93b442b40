#include "freedeconv/eigenmatrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace fdc {

std::vector<double> chebyshev_nodes(Interval X, int n_c) {
  if (n_c < 2) throw Error(ErrorCode::InvalidArgument, "n_c must be >= 2");
  if (!(X.width() >= 1e-12)) throw Error(ErrorCode::DegenerateInterval, "interval width below 1e-12");
  std::vector<double> c(n_c);
  for (int t = 0; t < n_c; ++t) c[t] = X.mid() + X.half() * std::cos(std::numbers::pi * t / (n_c - 1));
  std::sort(c.begin(), c.end());
  c.front() = X.lo;
  c.back() = X.hi;
  if (n_c % 2 == 1) c[n_c / 2] = X.mid();
  return c;
}

EigenmatrixBasis::EigenmatrixBasis(const Kernel& kernel, int n_c)
    : contour_(kernel.contour), domain_(kernel.domain) {
  if (n_c < 1) throw Error(ErrorCode::InvalidArgument, "n_c must be >= 1");
  nodes_ = n_c == 1 ? std::vector<double>{domain_.mid()} : chebyshev_nodes(domain_, n_c);
  const Eigen::Index nz = static_cast<Eigen::Index>(contour_.size());
  bhat_ext_.resize(nz, n_c);
  for (int t = 0; t < n_c; ++t) {
    LCVec col;
    try {
      col = kernel.column_ext ? kernel.column_ext(nodes_[t]) : kernel.column(nodes_[t]).cast<std::complex<long double>>();
    } catch (const Error& e) {
      std::ostringstream os;
      os << "kernel failed at node x=" << nodes_[t] << ": " << e.what();
      throw Error(ErrorCode::KernelEvaluationFailed, os.str());
    }
    if (col.size() != nz || !col.allFinite())
      throw Error(ErrorCode::KernelEvaluationFailed, "kernel column is not finite or has the wrong length");
    const long double nrm = col.norm();
    if (!(nrm > 0.0L)) throw Error(ErrorCode::KernelEvaluationFailed, "kernel column vanishes");
    bhat_ext_.col(t) = col / nrm;
  }
  bhat_ = bhat_ext_.cast<cplx>();
  Eigen::JacobiSVD<LCMat> svd(bhat_ext_, Eigen::ComputeThinU | Eigen::ComputeThinV);
  U_ = svd.matrixU();
  V_ = svd.matrixV();
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    sv_ext_.push_back(svd.singularValues()[i]);
    sv_.push_back(static_cast<double>(svd.singularValues()[i]));
  }
}

EigenmatrixModel EigenmatrixBasis::model(double threshold, bool scaled) const {
  using LD = long double;
  EigenmatrixModel m;
  m.contour = contour_;
  m.domain = domain_;
  m.cheb_nodes = nodes_;
  m.bhat = bhat_;
  m.threshold_used = threshold;
  m.bhat_singular_values = sv_;
  m.bhat_cond = sv_.back() > 0.0 ? sv_.front() / sv_.back() : std::numeric_limits<double>::infinity();

  int k = 0;
  while (k < static_cast<int>(sv_ext_.size()) && sv_ext_[k] > static_cast<LD>(threshold) * sv_ext_.front()) ++k;
  m.rank = k;
  const Eigen::Index nc = static_cast<Eigen::Index>(nodes_.size());
  Eigen::Matrix<LD, Eigen::Dynamic, 1> inv_s(k);
  for (int i = 0; i < k; ++i) inv_s[i] = 1.0L / sv_ext_[i];
  // B^+ restricted to the kept singular triplets.
  const LCMat pinv = V_.leftCols(k) * inv_s.asDiagonal() * U_.leftCols(k).adjoint();

  Eigen::Matrix<LD, Eigen::Dynamic, 1> lam(nc), lam_scaled(nc);
  for (Eigen::Index t = 0; t < nc; ++t) {
    lam[t] = nodes_[t];
    lam_scaled[t] = (static_cast<LD>(nodes_[t]) - static_cast<LD>(domain_.mid())) / static_cast<LD>(domain_.half());
  }
  m.M = (bhat_ext_ * lam.asDiagonal() * pinv).cast<cplx>();
  if (scaled && nc > 1) {
    m.krylov_op = (bhat_ext_ * lam_scaled.asDiagonal() * pinv).cast<cplx>();
    m.map = {domain_.mid(), domain_.half()};
  } else {
    m.krylov_op = m.M;
  }
  Eigen::JacobiSVD<CMat> msvd(m.M);
  m.m_norm = msvd.singularValues()[0];
  double res = 0.0;
  for (Eigen::Index t = 0; t < nc; ++t)
    res = std::max(res, (m.M * bhat_.col(t) - static_cast<double>(lam[t]) * bhat_.col(t)).norm());
  m.model_residual = res;
  return m;
}

std::vector<double> default_threshold_ladder() {
  std::vector<double> l;
  for (int e = -14; e <= -2; ++e) l.push_back(std::pow(10.0, e));
  return l;
}

EigenmatrixModel build_model(const Kernel& kernel, int n_c, double norm_bound, bool scaled,
                             const std::vector<double>& ladder) {
  const EigenmatrixBasis basis(kernel, n_c);
  for (double th : ladder) {
    EigenmatrixModel m = basis.model(th, scaled);
    if (m.m_norm <= norm_bound) return m;
  }
  std::ostringstream os;
  os << "no threshold in the ladder gives ||M|| <= " << norm_bound;
  throw Error(ErrorCode::NormBoundUnreachable, os.str());
}

double probe_residual(const EigenmatrixModel& model, const Kernel& kernel, int points) {
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = points == 1 ? model.domain.mid() : model.domain.lo + model.domain.width() * i / (points - 1);
    CVec b = kernel.column(x);
    b /= b.norm();
    worst = std::max(worst, (model.M * b - x * b).norm());
  }
  return worst;
}

CMat krylov_matrix(const CMat& M, const CVec& u, int n_l) {
  if (n_l < 1) throw Error(ErrorCode::InvalidArgument, "n_l must be >= 1");
  CMat T(u.size(), n_l + 1);
  T.col(0) = u;
  for (int j = 1; j <= n_l; ++j) T.col(j) = M * T.col(j - 1);
  return T;
}

EspritResult esprit_locations(const CMat& T, int n, Interval X, double im_tol, LocationMap map) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "spike count must be >= 1");
  const int n_l = static_cast<int>(T.cols()) - 1;
  if (n > n_l || n > T.rows()) throw Error(ErrorCode::InvalidArgument, "need n <= min(n_z, n_l)");
  Eigen::JacobiSVD<CMat> svd(T, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  EspritResult out;
  out.singular_values.assign(s.data(), s.data() + s.size());
  int usable = 0;
  while (usable < s.size() && s[usable] > 1e-14 * s[0]) ++usable;
  if (usable < n) {
    std::ostringstream os;
    os << "Krylov matrix has " << usable << " usable singular values, need " << n;
    throw Error(ErrorCode::RankDeficient, os.str());
  }
  if (n < s.size() && s[n - 1] - s[n] <= std::numeric_limits<double>::epsilon() * s[0])
    out.degenerate_truncation = true;

  const CMat Vn = svd.matrixV().leftCols(n).adjoint();  // top n rows of V*
  const CMat ZL = Vn.leftCols(n_l);
  const CMat ZH = Vn.rightCols(n_l);
  const CMat A = ZH * ZL.completeOrthogonalDecomposition().pseudoInverse();
  Eigen::ComplexEigenSolver<CMat> es(A, false);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::RankDeficient, "eigenvalues of Z_H Z_L^+ did not converge");

  const double lim = im_tol * X.width();
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const cplx lam = es.eigenvalues()[i];
    const cplx x(map(lam.real()), map.scale * lam.imag());
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) {
      out.rejected.push_back({x, "non-finite eigenvalue"});
    } else if (std::abs(x.imag()) > lim) {
      std::ostringstream os;
      os << "|Im| = " << std::abs(x.imag()) << " exceeds " << lim;
      out.rejected.push_back({x, os.str()});
    } else {
      out.locations.push_back(std::clamp(x.real(), X.lo, X.hi));
    }
  }
  if (static_cast<int>(out.locations.size()) < n) {
    std::ostringstream os;
    os << out.locations.size() << " of " << n << " eigenvalues are within the imaginary tolerance";
    throw Error(ErrorCode::TooFewValid, os.str());
  }
  std::sort(out.locations.begin(), out.locations.end());
  return out;
}

WeightFit solve_weights(const Kernel& kernel, const std::vector<double>& locations, const CVec& u, bool fit_offset) {
  if (locations.empty()) throw Error(ErrorCode::InvalidArgument, "no locations to fit");
  const Eigen::Index n = static_cast<Eigen::Index>(locations.size());
  const Eigen::Index off = fit_offset ? 1 : 0;
  CMat A(u.size(), n + off);
  if (fit_offset) A.col(0).setOnes();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!kernel.domain.contains(locations[k], 1e-12 * (1.0 + kernel.domain.width())))
      throw Error(ErrorCode::InvalidArgument, "location outside the kernel domain");
    const CVec col = kernel.column(locations[k]);
    if (col.size() != u.size()) throw Error(ErrorCode::InvalidArgument, "observation length does not match contour");
    A.col(k + off) = col;
  }
  Eigen::JacobiSVD<CMat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  WeightFit fit;
  fit.condition = s[s.size() - 1] > 0.0 ? s[0] / s[s.size() - 1] : std::numeric_limits<double>::infinity();
  if (fit.condition > 1e12) {
    std::ostringstream os;
    os << "design matrix condition " << fit.condition << " exceeds 1e12";
    throw Error(ErrorCode::IllConditionedLS, os.str());
  }
  const CVec w = svd.solve(u);
  fit.ls_residual = (A * w - u).norm();
  if (fit_offset) fit.offset = w[0];
  for (Eigen::Index k = 0; k < n; ++k) fit.weights.push_back(w[k + off]);
  return fit;
}

int estimate_spike_count(const std::vector<double>& sv, double gap_factor) {
  if (sv.empty()) throw Error(ErrorCode::InvalidArgument, "no singular values");
  double best = 0.0;
  int idx = 0;
  for (std::size_t i = 0; i + 1 < sv.size(); ++i) {
    const double r = sv[i + 1] > 0.0 ? sv[i] / sv[i + 1] : std::numeric_limits<double>::infinity();
    if (r > best) {
      best = r;
      idx = static_cast<int>(i) + 1;
    }
  }
  if (best < gap_factor) {
    std::ostringstream os;
    os << "largest singular value ratio " << best << " is below " << gap_factor;
    throw Error(ErrorCode::NoClearGap, os.str());
  }
  return idx;
}

RecoverySolution recover(const EigenmatrixModel& model, const Kernel& kernel, const CVec& u, int n, int n_l,
                         double im_tol, bool fit_offset) {
  const CMat T = krylov_matrix(model.krylov_op, u, n_l);
  EspritResult es = esprit_locations(T, n, model.domain, im_tol, model.map);
  RecoverySolution sol;
  sol.locations = std::move(es.locations);
  sol.rejected = std::move(es.rejected);
  sol.t_singular_values = std::move(es.singular_values);
  if (es.degenerate_truncation) sol.warnings.push_back("DegenerateTruncation");
  const WeightFit fit = solve_weights(kernel, sol.locations, u, fit_offset);
  sol.ls_residual = fit.ls_residual;
  sol.offset = fit.offset.real();
  for (std::size_t k = 0; k < fit.weights.size(); ++k) {
    sol.weights.push_back(fit.weights[k].real());
    const double im = std::abs(fit.weights[k].imag());
    sol.weight_imag_max = std::max(sol.weight_imag_max, im);
    if (im > im_tol) {
      std::ostringstream os;
      os << "weight " << k << " has imaginary part " << im;
      sol.warnings.push_back(os.str());
    }
  }
  return sol;
}

}  // namespace fdc
