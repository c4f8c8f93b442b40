#include "freedeconv/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>

namespace fdc {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ParseError, where + ": " + what);
}

double as_double(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<int>();
}

bool as_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) fail(where, "expected true or false");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(where + "." + key, "missing");
  return *it;
}

void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
      fail(where + "." + it.key(), "unknown field");
  }
}

std::vector<double> doubles(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_double(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json nullable(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

// Library errors raised while building objects from valid JSON are reported
// against the field that produced them.
template <class F>
auto at_field(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw;
    throw Error(e.code(), where + ": " + e.detail());
  }
}

json rejections_to_json(const std::vector<Rejection>& rs) {
  json a = json::array();
  for (const auto& r : rs) a.push_back({{"eigenvalue", to_json(r.eigenvalue)}, {"reason", r.reason}});
  return a;
}

}  // namespace

json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

cplx complex_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) fail(where, "expected [re, im]");
  return {as_double(j[0], where + "[0]"), as_double(j[1], where + "[1]")};
}

json to_json(const CVec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(to_json(v[i]));
  return a;
}

CVec cvec_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of [re, im]");
  CVec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = complex_from_json(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

json to_json(const CMat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_json(CVec(m.row(r).transpose())));
  return rows;
}

CMat cmat_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of rows");
  if (j.empty()) return CMat(0, 0);
  const CVec first = cvec_from_json(j[0], where + "[0]");
  CMat m(static_cast<Eigen::Index>(j.size()), first.size());
  m.row(0) = first.transpose();
  for (std::size_t r = 1; r < j.size(); ++r) {
    const std::string w = where + "[" + std::to_string(r) + "]";
    const CVec row = cvec_from_json(j[r], w);
    if (row.size() != first.size()) fail(w, "ragged matrix row");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

json to_json(const AtomicMeasure& m) {
  json atoms = json::array();
  for (const Atom& a : m.atoms()) atoms.push_back(json::array({a.location, a.weight}));
  return {{"atoms", atoms}};
}

AtomicMeasure measure_from_json(const json& j) {
  const json& atoms = require(j, "atoms", "measure");
  if (!atoms.is_array()) fail("measure.atoms", "expected an array");
  std::vector<Atom> out;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const std::string w = "measure.atoms[" + std::to_string(i) + "]";
    if (!atoms[i].is_array() || atoms[i].size() != 2) fail(w, "expected [location, weight]");
    out.push_back({as_double(atoms[i][0], w + "[0]"), as_double(atoms[i][1], w + "[1]")});
  }
  return at_field("measure", [&] { return AtomicMeasure(std::move(out)); });
}

json to_json(const EmpiricalSpectrum& s) { return {{"values", s.values()}}; }

EmpiricalSpectrum spectrum_from_json(const json& j) {
  std::vector<double> v = doubles(require(j, "values", "spectrum"), "spectrum.values");
  return at_field("spectrum", [&] { return EmpiricalSpectrum(std::move(v)); });
}

json to_json(const ParametricFamily& f) {
  if (f.builtin_id() > 0) return f.name();
  if (!f.lf_atoms()) throw Error(ErrorCode::InvalidArgument, "family '" + f.name() + "' has no JSON form");
  json atoms = json::array();
  for (const auto& a : *f.lf_atoms()) atoms.push_back({{"weight", a.weight}, {"loc", a.coef}});
  return {{"name", f.name()}, {"domain", {f.domain().lo, f.domain().hi}}, {"atoms", atoms}};
}

ParametricFamily family_from_json(const json& j, const std::string& where) {
  if (j.is_number_integer() || j.is_string()) {
    int id = 0;
    if (j.is_number_integer()) {
      id = j.get<int>();
    } else {
      const std::string s = j.get<std::string>();
      if (s.size() == 2 && (s[0] == 'F' || s[0] == 'f') && s[1] >= '1' && s[1] <= '6') id = s[1] - '0';
    }
    if (id < 1 || id > 6) fail(where, "unknown built-in family (expected F1..F6)");
    return ParametricFamily::builtin(id);
  }
  only_keys(j, {"name", "domain", "atoms"}, where);
  const std::string name = j.contains("name") ? as_string(j["name"], where + ".name") : std::string("custom");
  const std::vector<double> d = doubles(require(j, "domain", where), where + ".domain");
  if (d.size() != 2) fail(where + ".domain", "expected [lo, hi]");
  const json& atoms = require(j, "atoms", where);
  if (!atoms.is_array() || atoms.empty()) fail(where + ".atoms", "expected a nonempty array");
  std::vector<LinearFractionalAtom> lf;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const std::string w = where + ".atoms[" + std::to_string(i) + "]";
    only_keys(atoms[i], {"weight", "loc"}, w);
    const std::vector<double> c = doubles(require(atoms[i], "loc", w), w + ".loc");
    if (c.size() != 4) fail(w + ".loc", "expected [a, b, c, d] for (a + b x) / (c + d x)");
    lf.push_back({as_double(require(atoms[i], "weight", w), w + ".weight"), {c[0], c[1], c[2], c[3]}});
  }
  return at_field(where, [&] { return ParametricFamily::linear_fractional(name, {d[0], d[1]}, std::move(lf)); });
}

json to_json(const NewtonConfig& c) {
  return {{"tol", c.tol}, {"max_iter", c.max_iter}, {"damping", c.damping}, {"continuation_steps", c.continuation_steps}};
}

NewtonConfig newton_from_json(const json& j, const std::string& where) {
  only_keys(j, {"tol", "max_iter", "damping", "continuation_steps"}, where);
  NewtonConfig c;
  if (j.contains("tol")) c.tol = as_double(j["tol"], where + ".tol");
  if (j.contains("max_iter")) c.max_iter = as_int(j["max_iter"], where + ".max_iter");
  if (j.contains("damping")) c.damping = as_double(j["damping"], where + ".damping");
  if (j.contains("continuation_steps"))
    c.continuation_steps = as_int(j["continuation_steps"], where + ".continuation_steps");
  at_field(where, [&] { c.validate(); });
  return c;
}

json to_json(const Contour& c) {
  return {{"kind", contour_kind_name(c.kind)},
          {"radius", c.radius},
          {"eps_imag", c.eps_imag},
          {"points", to_json(CVec(Eigen::Map<const CVec>(c.points.data(), static_cast<Eigen::Index>(c.size()))))}};
}

Contour contour_from_json(const json& j, const std::string& where) {
  only_keys(j, {"kind", "radius", "eps_imag", "points"}, where);
  Contour c;
  c.kind = at_field(where + ".kind", [&] { return contour_kind_from_name(as_string(require(j, "kind", where), where + ".kind")); });
  c.radius = as_double(require(j, "radius", where), where + ".radius");
  c.eps_imag = j.contains("eps_imag") ? as_double(j["eps_imag"], where + ".eps_imag") : 0.0;
  const CVec p = cvec_from_json(require(j, "points", where), where + ".points");
  c.points.assign(p.data(), p.data() + p.size());
  at_field(where, [&] { c.validate(); });
  return c;
}

json to_json(const SolverConfig& c) {
  return {{"radius", nullable(c.radius)},
          {"radius_fraction", c.radius_fraction},
          {"xi_scale", c.xi_scale},
          {"eps_imag", c.eps_imag},
          {"n_z", c.n_z},
          {"n_c", c.n_c},
          {"n_l", nullable(c.n_l)},
          {"norm_bound", nullable(c.norm_bound)},
          {"im_tol", c.im_tol},
          {"newton", to_json(c.newton)},
          {"center", c.center},
          {"affine_offset", c.affine_offset},
          {"selection", selection_name(c.selection)},
          {"gap_factor", c.gap_factor}};
}

SolverConfig solver_from_json(const json& j, const std::string& where) {
  only_keys(j,
            {"radius", "radius_fraction", "xi_scale", "eps_imag", "n_z", "n_c", "n_l", "norm_bound", "im_tol", "newton",
             "center", "affine_offset", "selection", "gap_factor"},
            where);
  SolverConfig c;
  auto opt_double = [&](const char* k, std::optional<double>& dst) {
    if (j.contains(k) && !j[k].is_null()) dst = as_double(j[k], where + "." + k);
  };
  auto get_double = [&](const char* k, double& dst) {
    if (j.contains(k)) dst = as_double(j[k], where + "." + k);
  };
  auto get_int = [&](const char* k, int& dst) {
    if (j.contains(k)) dst = as_int(j[k], where + "." + k);
  };
  opt_double("radius", c.radius);
  get_double("radius_fraction", c.radius_fraction);
  get_double("xi_scale", c.xi_scale);
  get_double("eps_imag", c.eps_imag);
  get_int("n_z", c.n_z);
  get_int("n_c", c.n_c);
  if (j.contains("n_l") && !j["n_l"].is_null()) c.n_l = as_int(j["n_l"], where + ".n_l");
  opt_double("norm_bound", c.norm_bound);
  get_double("im_tol", c.im_tol);
  if (j.contains("newton")) c.newton = newton_from_json(j["newton"], where + ".newton");
  if (j.contains("center")) c.center = as_bool(j["center"], where + ".center");
  if (j.contains("affine_offset")) c.affine_offset = as_bool(j["affine_offset"], where + ".affine_offset");
  if (j.contains("selection"))
    c.selection = at_field(where + ".selection",
                           [&] { return selection_from_name(as_string(j["selection"], where + ".selection")); });
  get_double("gap_factor", c.gap_factor);
  at_field(where, [&] { c.validate(); });
  return c;
}

json to_json(const EigenmatrixModel& m) {
  return {{"contour", to_json(m.contour)},
          {"domain", {m.domain.lo, m.domain.hi}},
          {"nodes", m.cheb_nodes},
          {"bhat", to_json(m.bhat)},
          {"M", to_json(m.M)},
          {"krylov_op", to_json(m.krylov_op)},
          {"map", {{"offset", m.map.offset}, {"scale", m.map.scale}}},
          {"threshold", m.threshold_used},
          {"rank", m.rank},
          {"m_norm", m.m_norm},
          {"bhat_cond", m.bhat_cond},
          {"model_residual", m.model_residual},
          {"bhat_singular_values", m.bhat_singular_values}};
}

EigenmatrixModel model_from_json(const json& j) {
  const std::string w = "model";
  EigenmatrixModel m;
  m.contour = contour_from_json(require(j, "contour", w), w + ".contour");
  const std::vector<double> d = doubles(require(j, "domain", w), w + ".domain");
  if (d.size() != 2) fail(w + ".domain", "expected [lo, hi]");
  m.domain = {d[0], d[1]};
  m.cheb_nodes = doubles(require(j, "nodes", w), w + ".nodes");
  m.bhat = cmat_from_json(require(j, "bhat", w), w + ".bhat");
  m.M = cmat_from_json(require(j, "M", w), w + ".M");
  m.krylov_op = j.contains("krylov_op") ? cmat_from_json(j["krylov_op"], w + ".krylov_op") : m.M;
  if (j.contains("map")) {
    m.map.offset = as_double(require(j["map"], "offset", w + ".map"), w + ".map.offset");
    m.map.scale = as_double(require(j["map"], "scale", w + ".map"), w + ".map.scale");
  }
  m.threshold_used = as_double(require(j, "threshold", w), w + ".threshold");
  m.rank = as_int(require(j, "rank", w), w + ".rank");
  m.m_norm = as_double(require(j, "m_norm", w), w + ".m_norm");
  if (j.contains("bhat_cond")) m.bhat_cond = as_double(j["bhat_cond"], w + ".bhat_cond");
  if (j.contains("model_residual")) m.model_residual = as_double(j["model_residual"], w + ".model_residual");
  if (j.contains("bhat_singular_values"))
    m.bhat_singular_values = doubles(j["bhat_singular_values"], w + ".bhat_singular_values");
  const auto nz = static_cast<Eigen::Index>(m.contour.size());
  const auto nc = static_cast<Eigen::Index>(m.cheb_nodes.size());
  if (m.bhat.rows() != nz || m.bhat.cols() != nc) fail(w + ".bhat", "shape does not match contour and nodes");
  if (m.M.rows() != nz || m.M.cols() != nz) fail(w + ".M", "shape does not match contour");
  if (m.krylov_op.rows() != nz || m.krylov_op.cols() != nz) fail(w + ".krylov_op", "shape does not match contour");
  return m;
}

json to_json(const DeconvProblem& p) {
  json observed;
  if (const auto* s = std::get_if<EmpiricalSpectrum>(&p.observed))
    observed = {{"spectrum", to_json(*s)}};
  else
    observed = {{"vector", to_json(std::get<CVec>(p.observed))}};
  return {{"mode", mode_name(p.mode)},
          {"family", to_json(p.family)},
          {"observed", observed},
          {"n", p.n > 0 ? json(p.n) : json("auto")},
          {"solver", to_json(p.solver)}};
}

DeconvProblem problem_from_json(const json& j) {
  const std::string w = "problem";
  only_keys(j, {"mode", "family", "observed", "n", "solver"}, w);
  const Mode mode = at_field(w + ".mode", [&] { return mode_from_name(as_string(require(j, "mode", w), w + ".mode")); });
  ParametricFamily family = family_from_json(require(j, "family", w), w + ".family");
  const json& obs = require(j, "observed", w);
  only_keys(obs, {"spectrum", "vector"}, w + ".observed");
  std::variant<EmpiricalSpectrum, CVec> observed = CVec();
  if (obs.contains("spectrum") == obs.contains("vector"))
    fail(w + ".observed", "expected exactly one of spectrum, vector");
  if (obs.contains("spectrum"))
    observed = spectrum_from_json(obs["spectrum"]);
  else
    observed = cvec_from_json(obs["vector"], w + ".observed.vector");
  int n = 0;
  if (j.contains("n") && !(j["n"].is_string() && j["n"].get<std::string>() == "auto")) {
    n = as_int(j["n"], w + ".n");
    if (n < 1) fail(w + ".n", "expected a positive integer or \"auto\"");
  }
  SolverConfig solver = j.contains("solver") ? solver_from_json(j["solver"], w + ".solver") : SolverConfig{};
  return DeconvProblem{mode, std::move(family), std::move(observed), n, std::move(solver)};
}

json to_json(const DeconvReport& r) {
  const RecoverySolution& s = r.solution;
  const ModelDiagnostics& d = r.diagnostics;
  json sol = {{"locations", s.locations},
              {"weights", s.weights},
              {"ls_residual", s.ls_residual},
              {"t_singular_values", s.t_singular_values},
              {"rejected", rejections_to_json(s.rejected)},
              {"weight_imag_max", s.weight_imag_max},
              {"offset", s.offset},
              {"warnings", s.warnings}};
  json diag = {{"norm_bound", d.norm_bound},
               {"threshold_used", d.threshold_used},
               {"rank", d.rank},
               {"m_norm", d.m_norm},
               {"bhat_cond", d.bhat_cond},
               {"model_residual", d.model_residual},
               {"selected_threshold", d.selected_threshold},
               {"selected_scaled", d.selected_scaled},
               {"selected_n_l", d.selected_n_l},
               {"selected_m_norm", d.selected_m_norm},
               {"selection_residual", d.selection_residual},
               {"candidates_tried", d.candidates_tried},
               {"candidates_failed", d.candidates_failed},
               {"observation_offset", d.observation_offset},
               {"gap_ratio", nullable(d.gap_ratio)}};
  return {{"solution", sol},
          {"observation", to_json(r.observation)},
          {"contour", to_json(r.contour)},
          {"diagnostics", diag},
          {"seconds", r.seconds}};
}

DeconvReport report_from_json(const json& j) {
  const std::string w = "report";
  DeconvReport r;
  const json& sol = require(j, "solution", w);
  const std::string ws = w + ".solution";
  RecoverySolution& s = r.solution;
  s.locations = doubles(require(sol, "locations", ws), ws + ".locations");
  s.weights = doubles(require(sol, "weights", ws), ws + ".weights");
  s.ls_residual = as_double(require(sol, "ls_residual", ws), ws + ".ls_residual");
  if (sol.contains("t_singular_values"))
    s.t_singular_values = doubles(sol["t_singular_values"], ws + ".t_singular_values");
  if (sol.contains("rejected")) {
    const json& rj = sol["rejected"];
    if (!rj.is_array()) fail(ws + ".rejected", "expected an array");
    for (std::size_t i = 0; i < rj.size(); ++i) {
      const std::string wr = ws + ".rejected[" + std::to_string(i) + "]";
      s.rejected.push_back({complex_from_json(require(rj[i], "eigenvalue", wr), wr + ".eigenvalue"),
                            as_string(require(rj[i], "reason", wr), wr + ".reason")});
    }
  }
  if (sol.contains("weight_imag_max")) s.weight_imag_max = as_double(sol["weight_imag_max"], ws + ".weight_imag_max");
  if (sol.contains("offset")) s.offset = as_double(sol["offset"], ws + ".offset");
  if (sol.contains("warnings")) {
    if (!sol["warnings"].is_array()) fail(ws + ".warnings", "expected an array");
    for (std::size_t i = 0; i < sol["warnings"].size(); ++i)
      s.warnings.push_back(as_string(sol["warnings"][i], ws + ".warnings[" + std::to_string(i) + "]"));
  }
  if (s.weights.size() != s.locations.size()) fail(ws + ".weights", "length differs from locations");

  r.observation = cvec_from_json(require(j, "observation", w), w + ".observation");
  r.contour = contour_from_json(require(j, "contour", w), w + ".contour");

  const json& dj = require(j, "diagnostics", w);
  const std::string wd = w + ".diagnostics";
  ModelDiagnostics& d = r.diagnostics;
  auto num = [&](const char* k, double& dst) {
    if (dj.contains(k)) dst = as_double(dj[k], wd + "." + k);
  };
  auto integer = [&](const char* k, int& dst) {
    if (dj.contains(k)) dst = as_int(dj[k], wd + "." + k);
  };
  num("norm_bound", d.norm_bound);
  num("threshold_used", d.threshold_used);
  integer("rank", d.rank);
  num("m_norm", d.m_norm);
  num("bhat_cond", d.bhat_cond);
  num("model_residual", d.model_residual);
  num("selected_threshold", d.selected_threshold);
  if (dj.contains("selected_scaled")) d.selected_scaled = as_bool(dj["selected_scaled"], wd + ".selected_scaled");
  integer("selected_n_l", d.selected_n_l);
  num("selected_m_norm", d.selected_m_norm);
  num("selection_residual", d.selection_residual);
  integer("candidates_tried", d.candidates_tried);
  integer("candidates_failed", d.candidates_failed);
  num("observation_offset", d.observation_offset);
  if (dj.contains("gap_ratio") && !dj["gap_ratio"].is_null()) d.gap_ratio = as_double(dj["gap_ratio"], wd + ".gap_ratio");
  if (j.contains("seconds")) r.seconds = as_double(j["seconds"], w + ".seconds");
  return r;
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n');
    const std::size_t nl = text.rfind('\n', byte == 0 ? 0 : byte - 1);
    const std::size_t col = nl == std::string::npos ? byte + 1 : byte - nl;
    std::string what = e.what();
    if (auto p = what.find("syntax error"); p != std::string::npos) what = what.substr(p);
    throw Error(ErrorCode::ParseError,
                source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
  }
}

namespace {

// Position of element `index` of the array value following the key at `pos`,
// or `pos` itself if there is no such element.
std::size_t array_element(const std::string& text, std::size_t pos, int index) {
  auto skip_space = [&](std::size_t k) {
    while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
    return k;
  };
  std::size_t k = text.find(':', pos);
  if (k == std::string::npos) return pos;
  k = skip_space(k + 1);
  if (k >= text.size() || text[k] != '[') return pos;
  if (index == 0) return skip_space(k + 1);
  int depth = 0;
  int element = 0;
  bool in_string = false;
  for (std::size_t i = k; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\')
        ++i;
      else if (c == '"')
        in_string = false;
    } else if (c == '"') {
      in_string = true;
    } else if (c == '[' || c == '{') {
      ++depth;
    } else if (c == ']' || c == '}') {
      if (--depth == 0) break;
    } else if (c == ',' && depth == 1 && ++element == index) {
      return skip_space(i + 1);
    }
  }
  return pos;
}

}  // namespace

int line_of_path(const std::string& text, const std::string& path) {
  std::size_t from = 0;
  std::size_t found = std::string::npos;
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t end = path.find('.', start);
    if (end == std::string::npos) end = path.size();
    const std::string segment = path.substr(start, end - start);
    start = end + 1;
    const std::size_t bracket = segment.find('[');
    const std::string key = segment.substr(0, bracket);
    if (key.empty()) continue;
    const std::string quoted = "\"" + key + "\"";
    std::size_t pos = from;
    bool hit = false;
    while ((pos = text.find(quoted, pos)) != std::string::npos) {
      std::size_t k = pos + quoted.size();
      while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
      if (k < text.size() && text[k] == ':') {
        hit = true;
        break;
      }
      pos += quoted.size();
    }
    if (!hit) break;
    found = pos;
    if (bracket != std::string::npos) found = array_element(text, pos, std::atoi(segment.c_str() + bracket + 1));
    from = found + 1;
  }
  if (found == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(found), '\n'));
}

}  // namespace fdc
