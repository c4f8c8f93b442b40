#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "freedeconv/eigenmatrix.hpp"
#include "freedeconv/pipeline.hpp"

using namespace fdc;
using doctest::Approx;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an fdc::Error");
  return ErrorCode::InvalidArgument;
}

// G(xi_j, x) = exp(-i xi_j x) on [0, 1] with xi_j = j * xi_max / n_z.
Kernel fourier_kernel(int n_z = 64, double xi_max = 20.0) {
  Kernel k;
  k.contour = Contour::xi_ray(xi_max, n_z, 0.0);
  k.domain = {0.0, 1.0};
  const Contour c = k.contour;
  k.column = [c](double x) {
    CVec v(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) v[j] = std::exp(cplx(0.0, -1.0) * c.points[j] * x);
    return v;
  };
  return k;
}

CVec sum_columns(const Kernel& k, const std::vector<double>& xs, const std::vector<double>& ws = {}) {
  CVec u = CVec::Zero(static_cast<Eigen::Index>(k.contour.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) u += (ws.empty() ? 1.0 : ws[i]) * k.column(xs[i]);
  return u;
}

Kernel family_kernel(int id, const SolverConfig& cfg = {}) {
  const ParametricFamily f = ParametricFamily::builtin(id);
  return make_kernel(builtin_mode(id), f, default_contour(builtin_mode(id), f, cfg), cfg.newton);
}

}  // namespace

TEST_CASE("chebyshev nodes") {
  const auto a = chebyshev_nodes({-1.0, 1.0}, 3);
  CHECK(a == std::vector<double>{-1.0, 0.0, 1.0});
  CHECK(chebyshev_nodes({0.2, 1.0}, 2) == std::vector<double>{0.2, 1.0});
  const auto b = chebyshev_nodes({0.0, 2.0}, 5);
  REQUIRE(b.size() == 5);
  CHECK(b[0] == 0.0);
  CHECK(b[1] == Approx(0.2928932188134524).epsilon(1e-15));
  CHECK(b[2] == 1.0);
  CHECK(b[3] == Approx(1.7071067811865475).epsilon(1e-15));
  CHECK(b[4] == 2.0);
  CHECK(std::is_sorted(b.begin(), b.end()));
  CHECK(code_of([] { chebyshev_nodes({0.0, 1.0}, 1); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { chebyshev_nodes({0.5, 0.5}, 4); }) == ErrorCode::DegenerateInterval);
}

TEST_CASE("single-column eigenmatrix") {
  Kernel k;
  k.contour = Contour::circle(ContourKind::g_circle, 0.5, 16);
  k.domain = {0.0, 2.0};
  const Contour c = k.contour;
  k.column = [c](double x) {
    CVec v(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) v[j] = std::exp(c.points[j] * x);
    return v;
  };
  const EigenmatrixModel m = EigenmatrixBasis(k, 1).model(1e-14, false);
  REQUIRE(m.cheb_nodes.size() == 1);
  CHECK(m.rank == 1);
  const CVec b = m.bhat.col(0);
  CHECK(b.norm() == Approx(1.0).epsilon(1e-14));
  CHECK((m.M * b - m.cheb_nodes[0] * b).norm() < 1e-14);
  CHECK((m.M - m.cheb_nodes[0] * b * b.adjoint()).norm() < 1e-14);
}

TEST_CASE("well-conditioned basis reproduces the node spectrum") {
  const Kernel k = fourier_kernel();
  const EigenmatrixModel m = EigenmatrixBasis(k, 6).model(1e-14, false);
  CHECK(m.rank == 6);
  for (Eigen::Index t = 0; t < m.bhat.cols(); ++t) CHECK(m.bhat.col(t).norm() == Approx(1.0).epsilon(1e-12));
  CHECK(m.model_residual < 1e-10);
  Eigen::ComplexEigenSolver<CMat> es(m.M);
  for (double c : m.cheb_nodes) {
    double best = INFINITY;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) best = std::min(best, std::abs(es.eigenvalues()[i] - c));
    CHECK(best <= std::max(m.model_residual, 1e-10));
  }
}

TEST_CASE("norm rule picks the first admissible threshold") {
  const Kernel k = family_kernel(4);
  const EigenmatrixModel m = build_model(k, 32, 1e3);
  CHECK(m.m_norm <= 1e3);
  const auto ladder = default_threshold_ladder();
  CHECK(ladder.front() == 1e-14);
  CHECK(ladder.back() == 1e-2);
  const EigenmatrixBasis basis(k, 32);
  for (double th : ladder) {
    if (th >= m.threshold_used) break;
    CHECK(basis.model(th, false).m_norm > 1e3);
  }
  CHECK(code_of([&] { build_model(k, 32, 1e-3); }) == ErrorCode::NormBoundUnreachable);
}

TEST_CASE("default models stay accurate between nodes") {
  for (int id = 1; id <= 6; ++id) {
    CAPTURE(id);
    const SolverConfig cfg;
    const ParametricFamily f = ParametricFamily::builtin(id);
    const EigenmatrixModel m = default_model(builtin_mode(id), f, cfg);
    const double probe = probe_residual(m, family_kernel(id), 100);
    CHECK(m.m_norm <= default_norm_bound(f));
    CHECK(probe <= 1e-3);
    CHECK(probe <= 10.0 * m.model_residual);
  }
}

TEST_CASE("krylov matrix") {
  const CVec u = CVec::LinSpaced(5, 1.0, 5.0);
  const CMat I = CMat::Identity(5, 5);
  const CMat T1 = krylov_matrix(I, u, 2);
  REQUIRE(T1.cols() == 3);
  for (int j = 0; j < 3; ++j) CHECK((T1.col(j) - u).norm() == 0.0);
  const CMat T2 = krylov_matrix(2.0 * I, u, 2);
  CHECK((T2.col(1) - 2.0 * u).norm() == 0.0);
  CHECK((T2.col(2) - 4.0 * u).norm() == 0.0);
  CHECK(code_of([&] { krylov_matrix(I, u, 0); }) == ErrorCode::InvalidArgument);

  const Kernel k = family_kernel(4);
  const EigenmatrixModel m = default_model(Mode::additive, ParametricFamily::builtin(4), SolverConfig{});
  const double x = 0.77;
  const CVec b = k.column(x).normalized();
  const CMat T = krylov_matrix(m.M, b, 3);
  for (int j = 1; j <= 3; ++j) CHECK((T.col(j) - std::pow(x, j) * b).norm() < 1e-5);
}

TEST_CASE("esprit on exact synthetic data") {
  const Kernel k = fourier_kernel();
  const EigenmatrixModel m = build_model(k, 32, 10.0);
  const CVec u = sum_columns(k, {0.3, 0.7});
  const EspritResult r = esprit_locations(krylov_matrix(m.M, u, 6), 2, k.domain, 0.05);
  REQUIRE(r.locations.size() == 2);
  CHECK(r.locations[0] == Approx(0.3).epsilon(1e-8));
  CHECK(r.locations[1] == Approx(0.7).epsilon(1e-8));

  // Independent of the Krylov length on noiseless data, up to the model
  // residual amplified by the Krylov powers (about 1e-8 observed).
  for (int n_l = 6; n_l <= 14; ++n_l) {
    const EspritResult q = esprit_locations(krylov_matrix(m.M, u, n_l), 2, k.domain, 0.05);
    CHECK(std::abs(q.locations[0] - r.locations[0]) < 5e-8);
    CHECK(std::abs(q.locations[1] - r.locations[1]) < 5e-8);
  }

  const double xstar = 0.42;
  const EspritResult one = esprit_locations(krylov_matrix(m.M, k.column(xstar).normalized(), 3), 1, k.domain, 0.05);
  CHECK(std::abs(one.locations[0] - xstar) <= std::max(m.model_residual, 1e-12) * 10);
}

TEST_CASE("esprit failure modes") {
  CMat T(4, 3);
  T.setZero();
  T.col(0) << 1, 2, 3, 4;
  T.col(1) = T.col(0);
  T.col(2) = T.col(0);
  CHECK(code_of([&] { esprit_locations(T, 2, {0.0, 1.0}, 0.05); }) == ErrorCode::RankDeficient);

  CMat M = CMat::Zero(2, 2);
  M(0, 0) = cplx(0.5, 0.4);
  M(1, 1) = 0.6;
  const CVec u = CVec::Ones(2);
  const EspritResult loose = esprit_locations(krylov_matrix(M, u, 3), 2, {0.0, 1.0}, 1.0);
  CHECK(loose.locations.size() == 2);
  CHECK(code_of([&] { esprit_locations(krylov_matrix(M, u, 3), 2, {0.0, 1.0}, 0.05); }) == ErrorCode::TooFewValid);
}

TEST_CASE("weight solve") {
  const Kernel k = fourier_kernel();
  const WeightFit one = solve_weights(k, {0.4}, 3.0 * k.column(0.4));
  CHECK(one.weights[0].real() == Approx(3.0).epsilon(1e-12));
  CHECK(one.ls_residual < 1e-12);

  const WeightFit two = solve_weights(k, {0.25, 0.8}, sum_columns(k, {0.25, 0.8}));
  CHECK(std::abs(two.weights[0] - 1.0) < 1e-8);
  CHECK(std::abs(two.weights[1] - 1.0) < 1e-8);

  const cplx c0(0.3, -0.1);
  const WeightFit off = solve_weights(k, {0.25, 0.8}, sum_columns(k, {0.25, 0.8}) + CVec::Constant(64, c0), true);
  CHECK(std::abs(off.offset - c0) < 1e-8);
  CHECK(std::abs(off.weights[1] - 1.0) < 1e-8);

  CHECK(code_of([&] { solve_weights(k, {0.5, 0.5 + 1e-14}, k.column(0.5)); }) == ErrorCode::IllConditionedLS);
  CHECK(code_of([&] { solve_weights(k, {1.5}, k.column(0.5)); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("spike count from singular value gaps") {
  CHECK(estimate_spike_count({1.0, 0.9, 1e-9}) == 2);
  CHECK(estimate_spike_count({1.0, 1e-8}) == 1);
  CHECK(code_of([] { estimate_spike_count({1.0, 0.5, 0.25}); }) == ErrorCode::NoClearGap);

  const ParametricFamily F4 = ParametricFamily::builtin(4);
  const SolverConfig cfg;
  const Contour c = default_contour(Mode::additive, F4, cfg);
  const CVec u = forward_oracle(Mode::additive, F4, {0.4, 0.7, 1.0}, c, cfg.newton);
  const EigenmatrixModel m = default_model(Mode::additive, F4, cfg);
  Eigen::JacobiSVD<CMat> svd(krylov_matrix(m.M, u, 11));
  const auto s = svd.singularValues();
  CHECK(estimate_spike_count(std::vector<double>(s.data(), s.data() + s.size())) == 3);
}

TEST_CASE("noiseless recovery at Chebyshev nodes") {
  const Kernel k = fourier_kernel();
  const EigenmatrixModel m = build_model(k, 32, 10.0);
  const auto& nodes = m.cheb_nodes;
  const std::vector<std::vector<double>> sets = {{nodes[5]}, {nodes[8], nodes[20]}, {nodes[3], nodes[14], nodes[27]}};
  for (const auto& xs : sets) {
    const RecoverySolution s = recover(m, k, sum_columns(k, xs), static_cast<int>(xs.size()), 12, 0.05);
    REQUIRE(s.locations.size() == xs.size());
    // Residual selection mixes Krylov lengths; about 3e-8 observed.
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(std::abs(s.locations[i] - xs[i]) < 2e-7);
  }
}

TEST_CASE("recovery does not depend on the order of circle points") {
  const ParametricFamily F4 = ParametricFamily::builtin(4);
  const SolverConfig cfg;
  const Contour c = default_contour(Mode::additive, F4, cfg);
  std::vector<std::size_t> perm(c.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(2);
  std::shuffle(perm.begin(), perm.end(), rng);
  Contour shuffled = c;
  for (std::size_t j = 0; j < c.size(); ++j) shuffled.points[j] = c.points[perm[j]];

  const std::vector<double> xs = {0.45, 0.8};
  auto solve = [&](const Contour& contour) {
    const Kernel k = make_kernel(Mode::additive, F4, contour, cfg.newton);
    const EigenmatrixModel m = build_model(k, 32, 1e3);
    return recover(m, k, forward_oracle(Mode::additive, F4, xs, contour, cfg.newton), 2, 6, 0.05).locations;
  };
  const auto a = solve(c);
  const auto b = solve(shuffled);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-10);
}
