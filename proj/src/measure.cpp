#include "freedeconv/measure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fdc {

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::classical: return "classical";
    case Mode::additive: return "additive";
    case Mode::multiplicative: return "multiplicative";
  }
  return "?";
}

Mode mode_from_name(const std::string& s) {
  if (s == "classical") return Mode::classical;
  if (s == "additive") return Mode::additive;
  if (s == "multiplicative") return Mode::multiplicative;
  throw Error(ErrorCode::InvalidArgument, "unknown mode '" + s + "'");
}

AtomicMeasure::AtomicMeasure(std::vector<Atom> atoms) {
  if (atoms.empty()) throw Error(ErrorCode::InvalidArgument, "measure needs at least one atom");
  double total = 0.0;
  double scale = 0.0;
  for (const Atom& a : atoms) {
    if (!std::isfinite(a.location)) throw Error(ErrorCode::InvalidArgument, "non-finite atom location");
    if (!(a.weight > 0.0 && a.weight <= 1.0 + 1e-12))
      throw Error(ErrorCode::InvalidArgument, "atom weight outside (0,1]");
    total += a.weight;
    scale = std::max(scale, std::abs(a.location));
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "weights sum to " << total << ", expected 1";
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.location < b.location; });
  const double merge_tol = 1e-10 * (1.0 + scale);
  for (const Atom& a : atoms) {
    if (!atoms_.empty() && a.location - atoms_.back().location < merge_tol) {
      Atom& b = atoms_.back();
      const double w = a.weight + b.weight;
      b.location = (a.weight * a.location + b.weight * b.location) / w;
      b.weight = w;
    } else {
      atoms_.push_back(a);
    }
  }
}

AtomicMeasure AtomicMeasure::dirac(double a) { return AtomicMeasure({{a, 1.0}}); }

double AtomicMeasure::max_abs_location() const {
  return std::max(std::abs(atoms_.front().location), std::abs(atoms_.back().location));
}

EmpiricalSpectrum::EmpiricalSpectrum(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorCode::EmptySpectrum, "spectrum has no values");
  for (double v : values_)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite spectrum value");
  std::sort(values_.begin(), values_.end());
}

namespace {

AtomicMeasure eval_lf(const std::vector<LinearFractionalAtom>& atoms, double x) {
  std::vector<Atom> out;
  out.reserve(atoms.size());
  for (const auto& a : atoms) {
    const auto& c = a.coef;
    out.push_back({(c[0] + c[1] * x) / (c[2] + c[3] * x), a.weight});
  }
  return AtomicMeasure(std::move(out));
}

void probe_smoothness(const std::string& name, Interval X, const ParametricFamily::Rule& rule) {
  constexpr int kGrid = 33;
  std::vector<std::vector<Atom>> samples;
  double range = 0.0;
  for (int i = 0; i < kGrid; ++i) {
    const double x = X.lo + X.width() * i / (kGrid - 1);
    std::vector<Atom> atoms;
    try {
      atoms = rule(x).atoms();
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidFamily, name + ": invalid measure at x=" + std::to_string(x) + " (" + e.what() + ")");
    }
    if (!samples.empty() && atoms.size() != samples.front().size())
      throw Error(ErrorCode::InvalidFamily, name + ": atom count changes across the domain");
    for (const Atom& a : atoms) range = std::max(range, std::abs(a.location));
    samples.push_back(std::move(atoms));
  }
  const double tol = 0.1 * (1.0 + range);
  for (int i = 1; i + 1 < kGrid; ++i) {
    for (std::size_t k = 0; k < samples[i].size(); ++k) {
      const double d2l = samples[i + 1][k].location - 2 * samples[i][k].location + samples[i - 1][k].location;
      const double d2w = samples[i + 1][k].weight - 2 * samples[i][k].weight + samples[i - 1][k].weight;
      if (std::abs(d2l) > tol || std::abs(d2w) > 0.1)
        throw Error(ErrorCode::InvalidFamily, name + ": atoms are not smooth in the parameter");
    }
  }
}

}  // namespace

ParametricFamily::ParametricFamily(std::string name, Interval domain, Rule rule)
    : name_(std::move(name)), domain_(domain), rule_(std::move(rule)) {
  if (!(domain_.width() >= 1e-12)) throw Error(ErrorCode::DegenerateInterval, name_ + ": empty domain");
  probe_smoothness(name_, domain_, rule_);
}

ParametricFamily ParametricFamily::linear_fractional(std::string name, Interval domain,
                                                     std::vector<LinearFractionalAtom> atoms) {
  if (atoms.empty()) throw Error(ErrorCode::InvalidFamily, name + ": no atoms");
  ParametricFamily f(std::move(name), domain, [atoms](double x) { return eval_lf(atoms, x); });
  f.lf_atoms_ = std::move(atoms);
  return f;
}

ParametricFamily ParametricFamily::builtin(int id) {
  const double h = 0.5, a = 2.0 / 3.0, b = 1.0 / 3.0;
  std::vector<LinearFractionalAtom> atoms;
  Interval X;
  switch (id) {
    case 1: atoms = {{h, {0, 0, 1, 0}}, {h, {0, 1, 1, 0}}}; X = {0.2, 1.0}; break;
    case 2: atoms = {{a, {0, 0, 1, 0}}, {b, {0, 1, 1, 0}}}; X = {0.2, 1.0}; break;
    case 3: atoms = {{a, {0, -0.5, 1, 0}}, {b, {0, 1, 1, 0}}}; X = {0.4, 1.0}; break;
    case 4: atoms = {{h, {0, -1, 1, 0}}, {h, {0, 1, 1, 0}}}; X = {0.4, 1.0}; break;
    case 5: atoms = {{a, {3, 0, 2, 1}}, {b, {0, 3, 2, 1}}}; X = {1.4, 3.0}; break;
    case 6: atoms = {{h, {2, 0, 1, 1}}, {h, {0, 2, 1, 1}}}; X = {1.4, 3.0}; break;
    default: throw Error(ErrorCode::InvalidArgument, "built-in family id must be 1..6");
  }
  ParametricFamily f = linear_fractional("F" + std::to_string(id), X, std::move(atoms));
  f.builtin_id_ = id;
  return f;
}

double ParametricFamily::spectral_scale() const {
  double s = 0.0;
  for (int i = 0; i <= 64; ++i) s = std::max(s, rule_(domain_.lo + domain_.width() * i / 64).max_abs_location());
  return s;
}

Mode builtin_mode(int id) {
  if (id == 1 || id == 2) return Mode::classical;
  if (id == 3 || id == 4) return Mode::additive;
  if (id == 5 || id == 6) return Mode::multiplicative;
  throw Error(ErrorCode::InvalidArgument, "built-in family id must be 1..6");
}

void check_normalization(const ParametricFamily& family, Mode mode) {
  if (mode == Mode::classical) return;
  const double target = mode == Mode::additive ? 0.0 : 1.0;
  const Interval X = family.domain();
  for (int i = 0; i <= 32; ++i) {
    const double x = X.lo + X.width() * i / 32;
    const AtomicMeasure m = family(x);
    const double m1 = moment(m, 1);
    if (std::abs(m1 - target) > 1e-12) {
      std::ostringstream os;
      os << family.name() << " has first moment " << m1 << " at x=" << x << "; " << mode_name(mode)
         << " mode requires " << target;
      throw Error(ErrorCode::NormalizationViolation, os.str());
    }
    if (mode == Mode::multiplicative && m.min_location() <= 0.0)
      throw Error(ErrorCode::NonPositiveMeasure, family.name() + " has a non-positive atom");
  }
}

namespace {

inline void check_pole(double dist, cplx z) {
  if (dist < 1e-14 * (1.0 + std::abs(z))) throw Error(ErrorCode::DivisionNearPole, "z is on an atom");
}

}  // namespace

StieltjesPair stieltjes_pair(const AtomicMeasure& m, cplx z) {
  cplx g = 0.0, dg = 0.0;
  double dist = INFINITY;
  for (const Atom& a : m.atoms()) {
    const cplx d = z - a.location;
    dist = std::min(dist, std::abs(d));
    const cplx inv = 1.0 / d;
    g += a.weight * inv;
    dg -= a.weight * inv * inv;
  }
  check_pole(dist, z);
  return {g, dg};
}

StieltjesPair stieltjes_pair(const EmpiricalSpectrum& s, cplx z) {
  // Real-arithmetic accumulation: 1/(z-l) = conj(z-l)/|z-l|^2.
  const double zr = z.real(), zi = z.imag();
  double gr = 0, gi = 0, dr = 0, di = 0;
  double dmin2 = INFINITY;
  for (double l : s.values()) {
    const double a = zr - l;
    const double n2 = a * a + zi * zi;
    dmin2 = std::min(dmin2, n2);
    const double ir = a / n2, ii = -zi / n2;
    gr += ir;
    gi += ii;
    dr += ir * ir - ii * ii;
    di += 2 * ir * ii;
  }
  check_pole(std::sqrt(dmin2), z);
  const double inv_n = 1.0 / static_cast<double>(s.dimension());
  return {cplx(gr, gi) * inv_n, -cplx(dr, di) * inv_n};
}

cplx stieltjes(const AtomicMeasure& m, cplx z) { return stieltjes_pair(m, z).g; }
cplx stieltjes(const EmpiricalSpectrum& s, cplx z) { return stieltjes_pair(s, z).g; }
cplx stieltjes_deriv(const AtomicMeasure& m, cplx z) { return stieltjes_pair(m, z).dg; }
cplx stieltjes_deriv(const EmpiricalSpectrum& s, cplx z) { return stieltjes_pair(s, z).dg; }

double moment(const AtomicMeasure& m, int k) {
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "moment order must be nonnegative");
  double sum = 0.0;
  for (const Atom& a : m.atoms()) sum += a.weight * std::pow(a.location, k);
  return sum;
}

double moment(const EmpiricalSpectrum& s, int k) {
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "moment order must be nonnegative");
  double sum = 0.0;
  for (double v : s.values()) sum += std::pow(v, k);
  return sum / static_cast<double>(s.dimension());
}

cplx char_fn(const AtomicMeasure& m, cplx xi) {
  const cplx mi(0.0, -1.0);
  cplx sum = 0.0;
  for (const Atom& a : m.atoms()) sum += a.weight * std::exp(mi * a.location * xi);
  return sum;
}

cplx char_fn(const EmpiricalSpectrum& s, cplx xi) {
  // Samples from discrete laws repeat heavily; reuse the exponential across runs.
  const cplx mi(0.0, -1.0);
  cplx sum = 0.0;
  const auto& v = s.values();
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i + 1;
    while (j < v.size() && v[j] == v[i]) ++j;
    sum += static_cast<double>(j - i) * std::exp(mi * v[i] * xi);
    i = j;
  }
  return sum / static_cast<double>(v.size());
}

std::vector<HistogramBin> histogram(const EmpiricalSpectrum& s, int bins,
                                    std::optional<std::pair<double, double>> range) {
  if (bins < 1) throw Error(ErrorCode::InvalidArgument, "bins must be >= 1");
  const auto& v = s.values();
  double lo = range ? range->first : v.front();
  double hi = range ? range->second : v.back();
  if (hi < lo) throw Error(ErrorCode::InvalidArgument, "histogram range is reversed");
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double w = (hi - lo) / bins;
  std::vector<HistogramBin> out(bins);
  for (int b = 0; b < bins; ++b) out[b] = {lo + (b + 0.5) * w, 0};
  for (double x : v) {
    if (x < lo || x > hi) continue;
    int b = static_cast<int>((x - lo) / w);
    b = std::clamp(b, 0, bins - 1);
    ++out[b].count;
  }
  return out;
}

std::string histogram_csv(const std::vector<HistogramBin>& bins) {
  std::ostringstream os;
  os.precision(17);
  os << "bin_center,count\r\n";
  for (const auto& b : bins) os << b.center << ',' << b.count << "\r\n";
  return os.str();
}

}  // namespace fdc
