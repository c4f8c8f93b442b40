#include "freedeconv/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <cblas.h>
#include <lapacke.h>

namespace fdc {

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

Eigen::MatrixXd haar_columns(int N, int k, std::mt19937_64& rng) {
  if (N < 1 || k < 0 || k > N) throw Error(ErrorCode::InvalidArgument, "haar_columns needs 0 <= k <= N, N >= 1");
  Eigen::MatrixXd A(N, k);
  std::normal_distribution<double> normal;
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < N; ++i) A(i, j) = normal(rng);
  if (k == 0) return A;
  std::vector<double> tau(k);
  lapack_int info = LAPACKE_dgeqrf(LAPACK_COL_MAJOR, N, k, A.data(), N, tau.data());
  if (info != 0) throw Error(ErrorCode::EigensolveFailed, "dgeqrf failed");
  std::vector<double> sign(k);
  for (int j = 0; j < k; ++j) sign[j] = A(j, j) < 0.0 ? -1.0 : 1.0;
  info = LAPACKE_dorgqr(LAPACK_COL_MAJOR, N, k, k, A.data(), N, tau.data());
  if (info != 0) throw Error(ErrorCode::EigensolveFailed, "dorgqr failed");
  for (int j = 0; j < k; ++j) A.col(j) *= sign[j];
  return A;
}

Eigen::MatrixXd haar_orthogonal(int N, std::mt19937_64& rng) { return haar_columns(N, N, rng); }

std::vector<int> multiplicities(const AtomicMeasure& m, int N) {
  if (N < static_cast<int>(m.size())) throw Error(ErrorCode::InvalidArgument, "N must be at least the atom count");
  const auto& atoms = m.atoms();
  std::vector<int> c(atoms.size());
  std::vector<double> rem(atoms.size());
  int used = 0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double x = atoms[i].weight * N;
    c[i] = static_cast<int>(std::floor(x));
    rem[i] = x - c[i];
    used += c[i];
  }
  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (int r = 0; r < N - used; ++r) ++c[order[r % order.size()]];
  return c;
}

std::vector<double> spectrum_diagonal(const AtomicMeasure& m, int N) {
  const std::vector<int> c = multiplicities(m, N);
  std::vector<double> d;
  d.reserve(N);
  for (std::size_t i = 0; i < c.size(); ++i) d.insert(d.end(), c[i], m.atoms()[i].location);
  return d;
}

Eigen::MatrixXd spectrum_matrix(const AtomicMeasure& m, int N) {
  const std::vector<double> d = spectrum_diagonal(m, N);
  return Eigen::Map<const Eigen::VectorXd>(d.data(), N).asDiagonal();
}

namespace {

// Lower triangle of Q diag(A) Q^T with Q Haar, written into C (column-major,
// lower part accumulated, diagonal included). The largest eigenvalue block is
// represented as a multiple of the identity, so only the remaining columns of
// Q are drawn; permuting which columns of a Haar Q carry which eigenvalue
// leaves its law unchanged.
void add_conjugated(Eigen::MatrixXd& C, const AtomicMeasure& m, int N, std::mt19937_64& rng) {
  const std::vector<int> c = multiplicities(m, N);
  const auto& atoms = m.atoms();
  const std::size_t dom = static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
  const double base = atoms[dom].location;
  C.diagonal().array() += base;
  const int k = N - c[dom];
  if (k == 0) return;
  const Eigen::MatrixXd Q = haar_columns(N, k, rng);
  int col = 0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (i == dom || c[i] == 0) continue;
    cblas_dsyrk(CblasColMajor, CblasLower, CblasNoTrans, N, c[i], atoms[i].location - base, Q.data() + static_cast<std::ptrdiff_t>(col) * N,
                N, 1.0, C.data(), N);
    col += c[i];
  }
}

void mirror_lower(Eigen::MatrixXd& C) {
  const Eigen::Index n = C.rows();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) C(j, i) = C(i, j);
}

std::vector<double> symmetric_eigenvalues(Eigen::MatrixXd& C) {
  const int N = static_cast<int>(C.rows());
  std::vector<double> w(N);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', N, C.data(), N, w.data());
  if (info != 0) throw Error(ErrorCode::EigensolveFailed, "dsyevd returned " + std::to_string(info));
  return w;
}

void check_spec(const EnsembleSpec& spec, EnsembleKind kind) {
  if (spec.kind != kind) throw Error(ErrorCode::InvalidArgument, "ensemble kind does not match the sampler");
  if (spec.N < 1) throw Error(ErrorCode::InvalidArgument, "N must be >= 1");
  if (spec.measures.empty()) throw Error(ErrorCode::InvalidArgument, "ensemble needs at least one measure");
}

}  // namespace

EmpiricalSpectrum sample_additive(const EnsembleSpec& spec) {
  check_spec(spec, EnsembleKind::additive);
  const int N = spec.N;
  Eigen::MatrixXd C = spectrum_matrix(spec.measures[0], N);
  for (std::size_t k = 1; k < spec.measures.size(); ++k) {
    std::mt19937_64 rng = make_stream(spec.seed, k);
    add_conjugated(C, spec.measures[k], N, rng);
  }
  return EmpiricalSpectrum(symmetric_eigenvalues(C));
}

EmpiricalSpectrum sample_multiplicative(const EnsembleSpec& spec) {
  check_spec(spec, EnsembleKind::multiplicative);
  for (const auto& m : spec.measures)
    if (m.min_location() <= 0.0) throw Error(ErrorCode::NonPositiveMeasure, "multiplicative ensembles need positive atoms");
  const int N = spec.N;
  const std::size_t n = spec.measures.size();
  if (n == 1) return EmpiricalSpectrum(spectrum_diagonal(spec.measures[0], N));

  // Innermost layer: Q_n A_n Q_n^T, then wrap outward.
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(N, N);
  {
    std::mt19937_64 rng = make_stream(spec.seed, n - 1);
    add_conjugated(B, spec.measures[n - 1], N, rng);
  }
  for (std::size_t k = n - 1; k-- > 0;) {
    if (k + 1 < n - 1) {
      // B is dense here: B <- Q B Q^T with a full Haar factor.
      std::mt19937_64 rng = make_stream(spec.seed, k + 1);
      const Eigen::MatrixXd Q = haar_orthogonal(N, rng);
      mirror_lower(B);
      Eigen::MatrixXd QB(N, N);
      cblas_dsymm(CblasColMajor, CblasRight, CblasLower, N, N, 1.0, B.data(), N, Q.data(), N, 0.0, QB.data(), N);
      cblas_dgemm(CblasColMajor, CblasNoTrans, CblasTrans, N, N, N, 1.0, QB.data(), N, Q.data(), N, 0.0, B.data(), N);
    }
    const std::vector<double> a = spectrum_diagonal(spec.measures[k], N);
    Eigen::VectorXd s(N);
    for (int i = 0; i < N; ++i) s[i] = std::sqrt(a[i]);
    for (int j = 0; j < N; ++j)
      for (int i = j; i < N; ++i) B(i, j) *= s[i] * s[j];
  }
  return EmpiricalSpectrum(symmetric_eigenvalues(B));
}

EmpiricalSpectrum sample_classical(const std::vector<AtomicMeasure>& measures, int N, std::uint64_t seed) {
  if (N < 1) throw Error(ErrorCode::InvalidArgument, "N must be >= 1");
  if (measures.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one measure");
  std::vector<double> out(N, 0.0);
  for (std::size_t k = 0; k < measures.size(); ++k) {
    const auto& atoms = measures[k].atoms();
    std::vector<double> cdf(atoms.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) cdf[i] = (acc += atoms[i].weight);
    std::mt19937_64 rng = make_stream(seed, k);
    std::uniform_real_distribution<double> unif(0.0, acc);
    for (int j = 0; j < N; ++j) {
      const double u = unif(rng);
      std::size_t i = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      out[j] += atoms[std::min(i, atoms.size() - 1)].location;
    }
  }
  return EmpiricalSpectrum(std::move(out));
}

EmpiricalSpectrum sample(const EnsembleSpec& spec) {
  switch (spec.kind) {
    case EnsembleKind::additive: return sample_additive(spec);
    case EnsembleKind::multiplicative: return sample_multiplicative(spec);
    case EnsembleKind::classical: return sample_classical(spec.measures, spec.N, spec.seed);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown ensemble kind");
}

}  // namespace fdc
