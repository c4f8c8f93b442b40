#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "freedeconv/measure.hpp"

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

}  // namespace

TEST_CASE("atomic measure construction") {
  AtomicMeasure m({{1.0, 0.25}, {-1.0, 0.5}, {0.0, 0.25}});
  REQUIRE(m.size() == 3);
  CHECK(m.atoms()[0].location == -1.0);
  CHECK(m.atoms()[2].location == 1.0);
  CHECK(m.min_location() == -1.0);
  CHECK(m.max_abs_location() == 1.0);

  CHECK(code_of([] { AtomicMeasure({{0.0, 0.5}, {1.0, 0.4}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { AtomicMeasure({{0.0, 1.5}, {1.0, -0.5}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { AtomicMeasure({{NAN, 1.0}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { AtomicMeasure({}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("near-duplicate atoms are merged and moments survive") {
  const std::vector<Atom> raw = {{0.3, 0.2}, {0.3 + 1e-12, 0.3}, {0.9, 0.5}};
  AtomicMeasure m(raw);
  REQUIRE(m.size() == 2);
  CHECK(m.atoms()[0].weight == Approx(0.5).epsilon(1e-15));
  for (int k = 0; k <= 4; ++k) {
    double direct = 0.0;
    for (const Atom& a : raw) direct += a.weight * std::pow(a.location, k);
    CHECK(std::abs(moment(m, k) - direct) <= 1e-12);
  }
}

TEST_CASE("empirical spectrum") {
  EmpiricalSpectrum s({3.0, -1.0, 2.0});
  CHECK(s.values() == std::vector<double>{-1.0, 2.0, 3.0});
  CHECK(s.dimension() == 3);
  CHECK(code_of([] { EmpiricalSpectrum(std::vector<double>{}); }) == ErrorCode::EmptySpectrum);
  CHECK(code_of([] { EmpiricalSpectrum({1.0, INFINITY}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("stieltjes transform values") {
  const cplx z(0.4, 0.9);
  CHECK(std::abs(stieltjes(AtomicMeasure::dirac(0.7), z) - 1.0 / (z - 0.7)) < 1e-15);

  const double x = 0.6;
  const AtomicMeasure f4 = ParametricFamily::builtin(4)(x);
  CHECK(std::abs(stieltjes(f4, z) - z / (z * z - x * x)) < 1e-14);

  // F1 at x = 0.6, z = 2: direct sum 1/4 + 1/2.8.
  const AtomicMeasure f1 = ParametricFamily::builtin(1)(0.6);
  const cplx g = stieltjes(f1, 2.0);
  CHECK(g.real() == Approx(0.6071428571428571).epsilon(1e-15));
  CHECK(g.imag() == 0.0);
  const cplx dg = stieltjes_deriv(f1, 2.0);
  CHECK(dg.real() == Approx(-0.3801020408163265).epsilon(1e-15));

  CHECK(std::abs(stieltjes_deriv(AtomicMeasure::dirac(0.7), z) + 1.0 / ((z - 0.7) * (z - 0.7))) < 1e-14);

  CHECK(code_of([&] { stieltjes(f1, 0.6); }) == ErrorCode::DivisionNearPole);
  CHECK(code_of([] { stieltjes(EmpiricalSpectrum({0.0, 1.0}), 1.0); }) == ErrorCode::DivisionNearPole);
}

TEST_CASE("empirical stieltjes equals the atomic one for an exact discretization") {
  const AtomicMeasure m = ParametricFamily::builtin(3)(0.8);
  std::vector<double> v(200, -0.4);
  v.resize(300, 0.8);
  const EmpiricalSpectrum s(v);
  for (cplx z : {cplx(1.5, 0.2), cplx(-0.3, 1.0), cplx(0.0, -2.0)}) {
    CHECK(std::abs(stieltjes(s, z) - stieltjes(m, z)) < 1e-14);
    CHECK(std::abs(stieltjes_deriv(s, z) - stieltjes_deriv(m, z)) < 1e-14);
    CHECK(std::abs(char_fn(s, z) - char_fn(m, z)) < 1e-13);
  }
  CHECK(moment(s, 1) == Approx(moment(m, 1)).epsilon(1e-14));
}

TEST_CASE("stieltjes properties") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const AtomicMeasure m({{u(rng), 0.3}, {u(rng) + 5.0, 0.7}});
    const cplx z(u(rng), u(rng) + (trial % 2 ? 2.5 : -2.5));
    CHECK(std::abs(stieltjes(m, std::conj(z)) - std::conj(stieltjes(m, z))) < 1e-15);

    const double h = 1e-4;
    const cplx fd = (stieltjes(m, z + h) - stieltjes(m, z - h)) / (2.0 * h);
    CHECK(std::abs(fd - stieltjes_deriv(m, z)) < 1e-6);

    const cplx big = 1e6 * std::exp(cplx(0.0, u(rng)));
    const double bound = std::abs(moment(m, 1)) / std::abs(big);
    CHECK(std::abs(big * stieltjes(m, big) - 1.0) <= bound * (1.0 + 1e-4) + 1e-12);
  }
}

TEST_CASE("moments and characteristic function") {
  const AtomicMeasure d = AtomicMeasure::dirac(1.7);
  CHECK(moment(d, 0) == 1.0);
  CHECK(moment(d, 3) == Approx(1.7 * 1.7 * 1.7));
  for (double x : {0.4, 0.55, 1.0}) CHECK(std::abs(moment(ParametricFamily::builtin(4)(x), 1)) < 1e-15);

  CHECK(std::abs(char_fn(AtomicMeasure::dirac(0.0), 2.3) - 1.0) < 1e-15);
  const double x = 0.45;
  const AtomicMeasure f1 = ParametricFamily::builtin(1)(x);
  for (double xi : {0.0, 0.7, 3.1, 10.0}) {
    const cplx expect = 0.5 + 0.5 * std::exp(cplx(0.0, -x * xi));
    CHECK(std::abs(char_fn(f1, xi) - expect) < 1e-15);
    CHECK(std::abs(char_fn(f1, xi)) <= 1.0 + 1e-15);
  }
  CHECK(std::abs(char_fn(ParametricFamily::builtin(6)(2.0), 0.0) - 1.0) < 1e-15);
}

TEST_CASE("built-in families") {
  for (int id = 1; id <= 6; ++id) {
    const ParametricFamily f = ParametricFamily::builtin(id);
    CHECK(f.builtin_id() == id);
    CHECK(f.name() == "F" + std::to_string(id));
    CHECK_NOTHROW(check_normalization(f, builtin_mode(id)));
  }
  CHECK(builtin_mode(1) == Mode::classical);
  CHECK(builtin_mode(4) == Mode::additive);
  CHECK(builtin_mode(6) == Mode::multiplicative);

  const AtomicMeasure f5 = ParametricFamily::builtin(5)(2.0);
  CHECK(f5.atoms()[0].location == Approx(0.75));
  CHECK(f5.atoms()[0].weight == Approx(2.0 / 3.0));
  CHECK(f5.atoms()[1].location == Approx(1.5));
  const AtomicMeasure f3 = ParametricFamily::builtin(3)(0.8);
  CHECK(f3.atoms()[0].location == Approx(-0.4));

  CHECK(code_of([] { check_normalization(ParametricFamily::builtin(1), Mode::additive); }) ==
        ErrorCode::NormalizationViolation);
  CHECK(code_of([] { check_normalization(ParametricFamily::builtin(4), Mode::multiplicative); }) ==
        ErrorCode::NormalizationViolation);
  CHECK(code_of([] { ParametricFamily::builtin(7); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("family smoothness probe") {
  // Atom jumps halfway through the domain.
  auto jump = [](double x) { return AtomicMeasure::dirac(x < 0.5 ? 0.0 : 1.0); };
  CHECK(code_of([&] { ParametricFamily("jump", {0.0, 1.0}, jump); }) == ErrorCode::InvalidFamily);
  // Atom count changes when the two atoms collide at x = 0.5.
  auto merge = [](double x) { return AtomicMeasure({{0.5, 0.5}, {x, 0.5}}); };
  CHECK(code_of([&] { ParametricFamily("merge", {0.0, 1.0}, merge); }) == ErrorCode::InvalidFamily);
  CHECK_NOTHROW(ParametricFamily("smooth", {0.0, 1.0}, [](double x) { return AtomicMeasure::dirac(x * x); }));
}

TEST_CASE("histogram") {
  auto h = histogram(EmpiricalSpectrum({0.0, 1.0}), 2);
  REQUIRE(h.size() == 2);
  CHECK(h[0].center == Approx(0.25));
  CHECK(h[0].count == 1);
  CHECK(h[1].center == Approx(0.75));
  CHECK(h[1].count == 1);

  auto c = histogram(EmpiricalSpectrum(std::vector<double>(17, 2.5)), 1);
  REQUIRE(c.size() == 1);
  CHECK(c[0].center == 2.5);
  CHECK(c[0].count == 17);

  // Uniform draws: each of 10 bins holds Binomial(10^4, 0.1) counts.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(10000);
  for (double& x : v) x = u(rng);
  auto b = histogram(EmpiricalSpectrum(v), 10, std::make_pair(0.0, 1.0));
  std::size_t total = 0;
  for (const auto& bin : b) {
    CHECK(std::abs(static_cast<double>(bin.count) - 1000.0) <= 5.0 * std::sqrt(900.0));
    total += bin.count;
  }
  CHECK(total == 10000);

  // Explicit range drops outside values; the last edge is closed.
  auto r = histogram(EmpiricalSpectrum({-1.0, 0.0, 0.5, 1.0, 2.0}), 2, std::make_pair(0.0, 1.0));
  CHECK(r[0].count + r[1].count == 3);
  CHECK(r[1].count == 2);

  CHECK(code_of([] { histogram(EmpiricalSpectrum({1.0}), 0); }) == ErrorCode::InvalidArgument);
  CHECK(histogram_csv(h) == "bin_center,count\r\n0.25,1\r\n0.75,1\r\n");
}
