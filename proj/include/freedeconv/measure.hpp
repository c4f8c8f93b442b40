#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "freedeconv/error.hpp"

namespace fdc {

using cplx = std::complex<double>;

enum class Mode { classical, additive, multiplicative };

const char* mode_name(Mode m);
Mode mode_from_name(const std::string& s);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  double half() const { return 0.5 * (hi - lo); }
  bool contains(double x, double slack = 0.0) const { return x >= lo - slack && x <= hi + slack; }
};

struct Atom {
  double location;
  double weight;
};

// Finite probability measure. Atoms are sorted by location, near-duplicates
// are merged, and weights must sum to one.
class AtomicMeasure {
 public:
  explicit AtomicMeasure(std::vector<Atom> atoms);
  static AtomicMeasure dirac(double a);

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  double min_location() const { return atoms_.front().location; }
  double max_location() const { return atoms_.back().location; }
  double max_abs_location() const;

 private:
  std::vector<Atom> atoms_;
};

// Sorted eigenvalues of a sampled matrix, or scalar samples.
class EmpiricalSpectrum {
 public:
  explicit EmpiricalSpectrum(std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  std::size_t dimension() const { return values_.size(); }

 private:
  std::vector<double> values_;
};

// Atom whose location is (a + b x) / (c + d x) with a fixed weight.
struct LinearFractionalAtom {
  double weight;
  std::array<double, 4> coef;
};

class ParametricFamily {
 public:
  using Rule = std::function<AtomicMeasure(double)>;

  // Runs a finite-difference smoothness probe over the domain; throws
  // InvalidFamily if the atom count changes or a location/weight jumps.
  ParametricFamily(std::string name, Interval domain, Rule rule);

  static ParametricFamily builtin(int id);
  static ParametricFamily linear_fractional(std::string name, Interval domain,
                                            std::vector<LinearFractionalAtom> atoms);

  AtomicMeasure operator()(double x) const { return rule_(x); }
  const std::string& name() const { return name_; }
  Interval domain() const { return domain_; }
  int builtin_id() const { return builtin_id_; }
  const std::optional<std::vector<LinearFractionalAtom>>& lf_atoms() const { return lf_atoms_; }

  // Largest |atom location| over the domain, sampled on a fine grid.
  double spectral_scale() const;

 private:
  std::string name_;
  Interval domain_;
  Rule rule_;
  int builtin_id_ = 0;
  std::optional<std::vector<LinearFractionalAtom>> lf_atoms_;
};

// Mode each built-in family was constructed for.
Mode builtin_mode(int id);

// Throws NormalizationViolation unless the first moment is 0 (additive) or 1
// (multiplicative) across the domain to 1e-12. Classical is unconstrained.
void check_normalization(const ParametricFamily& family, Mode mode);

struct StieltjesPair {
  cplx g;
  cplx dg;
};

cplx stieltjes(const AtomicMeasure& m, cplx z);
cplx stieltjes(const EmpiricalSpectrum& s, cplx z);
cplx stieltjes_deriv(const AtomicMeasure& m, cplx z);
cplx stieltjes_deriv(const EmpiricalSpectrum& s, cplx z);
StieltjesPair stieltjes_pair(const AtomicMeasure& m, cplx z);
StieltjesPair stieltjes_pair(const EmpiricalSpectrum& s, cplx z);

double moment(const AtomicMeasure& m, int k);
double moment(const EmpiricalSpectrum& s, int k);

cplx char_fn(const AtomicMeasure& m, cplx xi);
cplx char_fn(const EmpiricalSpectrum& s, cplx xi);

struct HistogramBin {
  double center;
  std::size_t count;
};

// Bins are half-open [lo, hi) except the last, which is closed. Values outside
// an explicit range are not counted.
std::vector<HistogramBin> histogram(const EmpiricalSpectrum& s, int bins,
                                    std::optional<std::pair<double, double>> range = std::nullopt);
std::string histogram_csv(const std::vector<HistogramBin>& bins);

}  // namespace fdc
