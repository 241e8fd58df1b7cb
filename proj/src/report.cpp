#include "kktstab/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "kktstab/errors.hpp"

namespace kktstab {

using nlohmann::json;

json real_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  return v;
}

double real_from_json(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ParseError("expected a number or extended-real sentinel, got " + v.dump());
}

namespace {

json reals(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(real_to_json(x));
  return out;
}

std::vector<double> reals_from(const json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(real_from_json(x));
  return out;
}

NewtonStatus status_from_string(const std::string& s) {
  for (auto st : {NewtonStatus::kConverged, NewtonStatus::kMaxIterations, NewtonStatus::kStagnation}) {
    if (to_string(st) == s) return st;
  }
  throw ParseError("unknown Newton status '" + s + "'");
}

json to_json(const CheckResult& c) {
  return {{"verdict", to_string(c.verdict)}, {"tol", real_to_json(c.tol)}, {"method", c.method}};
}

CheckResult check_from_json(const json& j) {
  return {verdict_from_string(j.at("verdict").get<std::string>()), real_from_json(j.at("tol")),
          j.at("method").get<std::string>()};
}

void dump_value(const json& v, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (v.type()) {
    case json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += inner + json(it.key()).dump() + ": ";
        dump_value(it.value(), indent + 1, out);
      }
      out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",\n";
        out += inner;
        dump_value(v[i], indent + 1, out);
      }
      out += "\n" + pad + "]";
      return;
    }
    case json::value_t::number_float: {
      const double d = v.get<double>();
      if (!std::isfinite(d)) {
        out += real_to_json(d).dump();
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", d);
      out += buf;
      return;
    }
    default:
      out += v.dump();
  }
}

}  // namespace

json to_json(const NewtonTrace& t) {
  return {{"residual_norms", reals(t.residual_norms)},
          {"step_lengths", reals(t.step_lengths)},
          {"min_singular_values", reals(t.min_singular_values)},
          {"status", to_string(t.status)},
          {"iterations", t.iterations()}};
}

NewtonTrace newton_trace_from_json(const json& j) {
  NewtonTrace t;
  t.residual_norms = reals_from(j.at("residual_norms"));
  t.step_lengths = reals_from(j.at("step_lengths"));
  t.min_singular_values = reals_from(j.at("min_singular_values"));
  t.status = status_from_string(j.at("status").get<std::string>());
  return t;
}

json to_json(const ProbeStats& p) {
  return {{"radius", real_to_json(p.radius)},       {"num_delta", p.num_delta},
          {"starts", p.starts},                     {"violations", p.violations},
          {"failures", p.failures},                 {"threshold", real_to_json(p.threshold)},
          {"modulus", real_to_json(p.modulus)},     {"positive", p.positive()}};
}

ProbeStats probe_stats_from_json(const json& j) {
  ProbeStats p;
  p.radius = real_from_json(j.at("radius"));
  p.num_delta = j.at("num_delta").get<int>();
  p.starts = j.at("starts").get<int>();
  p.violations = j.at("violations").get<int>();
  p.failures = j.at("failures").get<int>();
  p.threshold = real_from_json(j.at("threshold"));
  p.modulus = real_from_json(j.at("modulus"));
  return p;
}

json to_json(const StabilityReport& r) {
  json legs = {{"second_order", r.leg_second_order},
               {"sweep", r.leg_sweep},
               {"probe", r.leg_probe}};
  return {
      {"rcq", to_json(r.rcq)},
      {"srcq", to_json(r.srcq)},
      {"nondegeneracy", to_json(r.nondegeneracy)},
      {"multiplier_unique", r.multiplier_unique},
      {"critical_dim", r.critical_dim},
      {"ssosc",
       {{"verdict", to_string(r.ssosc.verdict)},
        {"tol", real_to_json(r.ssosc.tol)},
        {"min_eigenvalue", real_to_json(r.ssosc.min_eigenvalue)},
        {"subspace_dim", r.ssosc.subspace_dim}}},
      {"sweep",
       {{"status", r.sweep.status()},
        {"min_singular_value", real_to_json(r.sweep.min_singular_value)},
        {"elements", r.sweep.elements},
        {"tol", real_to_json(r.sweep.tol)}}},
      {"probe", to_json(r.probe)},
      {"legs", legs},
      {"consistency", r.consistent ? "consistent" : "inconsistent"},
      {"disagreement", r.disagreement},
  };
}

StabilityReport stability_report_from_json(const json& j) {
  StabilityReport r;
  r.rcq = check_from_json(j.at("rcq"));
  r.srcq = check_from_json(j.at("srcq"));
  r.nondegeneracy = check_from_json(j.at("nondegeneracy"));
  r.multiplier_unique = j.at("multiplier_unique").get<bool>();
  r.critical_dim = j.at("critical_dim").get<int>();
  const json& s = j.at("ssosc");
  r.ssosc.verdict = verdict_from_string(s.at("verdict").get<std::string>());
  r.ssosc.tol = real_from_json(s.at("tol"));
  r.ssosc.min_eigenvalue = real_from_json(s.at("min_eigenvalue"));
  r.ssosc.subspace_dim = s.at("subspace_dim").get<int>();
  const json& w = j.at("sweep");
  r.sweep.singular_found = w.at("status").get<std::string>() == "singular-element-found";
  r.sweep.min_singular_value = real_from_json(w.at("min_singular_value"));
  r.sweep.elements = w.at("elements").get<int>();
  r.sweep.tol = real_from_json(w.at("tol"));
  r.probe = probe_stats_from_json(j.at("probe"));
  r.leg_second_order = j.at("legs").at("second_order").get<bool>();
  r.leg_sweep = j.at("legs").at("sweep").get<bool>();
  r.leg_probe = j.at("legs").at("probe").get<bool>();
  r.consistent = j.at("consistency").get<std::string>() == "consistent";
  r.disagreement = j.at("disagreement").get<std::string>();
  return r;
}

json make_report(const std::string& kind, std::uint64_t seed, json tolerances, json result) {
  return {{"tool", kToolName},
          {"version", kToolVersion},
          {"kind", kind},
          {"seed", seed},
          {"tolerances", std::move(tolerances)},
          {"result", std::move(result)}};
}

std::string canonical_dump(const json& doc) {
  std::string out;
  dump_value(doc, 0, out);
  out += "\n";
  return out;
}

void emit_report(const json& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open report file '" + path + "' for writing");
  out << canonical_dump(doc);
  if (!out) throw IoError("failed writing report file '" + path + "'");
}

json load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace kktstab
