#pragma once

#include <string>

#include "json.hpp"

#include "freedeconv/eigenmatrix.hpp"
#include "freedeconv/measure.hpp"
#include "freedeconv/pipeline.hpp"

namespace fdc {

using json = nlohmann::json;

// Complex numbers are [re, im]; complex vectors and matrices are nested
// arrays of those. Parse failures throw ParseError naming the offending field.

json to_json(cplx z);
cplx complex_from_json(const json& j, const std::string& where);
json to_json(const CVec& v);
CVec cvec_from_json(const json& j, const std::string& where);
json to_json(const CMat& m);
CMat cmat_from_json(const json& j, const std::string& where);

// {"atoms": [[location, weight], ...]}
json to_json(const AtomicMeasure& m);
AtomicMeasure measure_from_json(const json& j);
// {"values": [...]}
json to_json(const EmpiricalSpectrum& s);
EmpiricalSpectrum spectrum_from_json(const json& j);

// A built-in family is its name ("F4") or id; other linear-fractional
// families are {"name", "domain": [lo, hi], "atoms": [{"weight", "loc": [a, b, c, d]}]}.
json to_json(const ParametricFamily& f);
ParametricFamily family_from_json(const json& j, const std::string& where = "family");

json to_json(const NewtonConfig& c);
NewtonConfig newton_from_json(const json& j, const std::string& where = "solver.newton");
json to_json(const Contour& c);
Contour contour_from_json(const json& j, const std::string& where = "contour");
// Every field is written, unset optionals as null; missing fields keep defaults.
json to_json(const SolverConfig& c);
SolverConfig solver_from_json(const json& j, const std::string& where = "solver");

json to_json(const EigenmatrixModel& m);
EigenmatrixModel model_from_json(const json& j);

json to_json(const DeconvProblem& p);
DeconvProblem problem_from_json(const json& j);
json to_json(const DeconvReport& r);
DeconvReport report_from_json(const json& j);

json parse_json(const std::string& text, const std::string& source);

// 1-based line of the field at a dotted path such as "solver.newton.tol" or
// "true_parameters[1]": each key is searched after the previous one. Array
// elements resolve to their key's line. Returns 0 if the path is not found.
int line_of_path(const std::string& text, const std::string& path);

}  // namespace fdc
