#include "kktstab/instance.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "kktstab/errors.hpp"
#include "kktstab/kkt.hpp"

namespace kktstab {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& field, const std::string& msg) {
  throw ParseError(where + ": field '" + field + "': " + msg);
}

const json& require(const json& obj, const char* key, const std::string& where,
                    const std::string& field) {
  if (!obj.is_object()) fail(where, field, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, field == "<root>" ? std::string(key) : field + "." + key, "missing");
  return *it;
}

double number(const json& v, const std::string& where, const std::string& field) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "+inf" || s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  fail(where, field, "expected a number");
}

int integer(const json& v, const std::string& where, const std::string& field) {
  if (!v.is_number_integer()) fail(where, field, "expected an integer");
  return v.get<int>();
}

Vec vector_of(const json& v, const std::string& where, const std::string& field) {
  if (!v.is_array()) fail(where, field, "expected an array of numbers");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = number(v[i], where, field + "[" + std::to_string(i) + "]");
  }
  return out;
}

Mat matrix_of(const json& v, int order, const std::string& where, const std::string& field) {
  if (!v.is_array() || static_cast<int>(v.size()) != order) {
    fail(where, field, "expected " + std::to_string(order) + " rows");
  }
  Mat out(order, order);
  for (int i = 0; i < order; ++i) {
    const Vec row = vector_of(v[static_cast<std::size_t>(i)], where,
                              field + "[" + std::to_string(i) + "]");
    if (row.size() != order) fail(where, field, "rows must have " + std::to_string(order) + " entries");
    out.row(i) = row.transpose();
  }
  if ((out - out.transpose()).norm() > 1e-12 * (1.0 + out.norm())) {
    fail(where, field, "matrix must be symmetric");
  }
  return out;
}

std::vector<QuadraticForm> polynomial_outputs(const json& spec, int n, const std::string& where) {
  if (!spec.is_array() || spec.empty()) fail(where, "F.polynomial", "expected a non-empty array");
  std::vector<QuadraticForm> outs;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const std::string field = "F.polynomial[" + std::to_string(i) + "]";
    const json& out = spec[i];
    QuadraticForm q{0.0, Vec::Zero(n), Mat::Zero(n, n)};
    if (out.contains("constant")) q.constant = number(out["constant"], where, field + ".constant");
    for (std::size_t t = 0; t < require(out, "terms", where, field).size(); ++t) {
      const std::string tf = field + ".terms[" + std::to_string(t) + "]";
      const json& term = out["terms"][t];
      const double coef = number(require(term, "coef", where, tf), where, tf + ".coef");
      const json& vars = require(term, "vars", where, tf);
      if (!vars.is_array()) fail(where, tf + ".vars", "expected an array");
      if (vars.size() > 2) fail(where, tf + ".vars", "degree above 2 is not supported");
      std::vector<int> idx;
      for (const auto& v : vars) {
        const int k = integer(v, where, tf + ".vars");
        if (k < 0 || k >= n) fail(where, tf + ".vars", "variable index out of range [0, n)");
        idx.push_back(k);
      }
      if (idx.empty()) {
        q.constant += coef;
      } else if (idx.size() == 1) {
        q.linear[idx[0]] += coef;
      } else if (idx[0] == idx[1]) {
        q.quadratic(idx[0], idx[0]) += 2.0 * coef;
      } else {
        q.quadratic(idx[0], idx[1]) += coef;
        q.quadratic(idx[1], idx[0]) += coef;
      }
    }
    outs.push_back(std::move(q));
  }
  return outs;
}

// F(x) = (objective^T x, svec(A0 + sum_i x_i A_i)); the objective output is optional.
std::vector<QuadraticForm> affine_pencil(const json& params, int n, const std::string& where) {
  const int order = integer(require(params, "order", where, "F.builtin.params"), where,
                            "F.builtin.params.order");
  if (order < 1) fail(where, "F.builtin.params.order", "must be positive");
  const Mat a0 = matrix_of(require(params, "constant", where, "F.builtin.params"), order, where,
                           "F.builtin.params.constant");
  const json& coeffs = require(params, "coefficients", where, "F.builtin.params");
  if (!coeffs.is_array() || static_cast<int>(coeffs.size()) != n) {
    fail(where, "F.builtin.params.coefficients", "expected n = " + std::to_string(n) + " matrices");
  }
  const int k = svec_dim(order);
  std::vector<QuadraticForm> outs;
  if (params.contains("objective")) {
    const Vec c = vector_of(params["objective"], where, "F.builtin.params.objective");
    if (c.size() != n) fail(where, "F.builtin.params.objective", "expected n entries");
    outs.push_back({0.0, c, Mat::Zero(n, n)});
  }
  Mat lin(k, n);
  for (int i = 0; i < n; ++i) {
    lin.col(i) = svec(matrix_of(coeffs[static_cast<std::size_t>(i)], order, where,
                                "F.builtin.params.coefficients[" + std::to_string(i) + "]"));
  }
  const Vec base = svec(a0);
  for (int r = 0; r < k; ++r) outs.push_back({base[r], lin.row(r).transpose(), Mat::Zero(n, n)});
  return outs;
}

// F(x) = (0.5 ||x - svec(C)||^2, x) over svec coordinates of order-k matrices.
std::vector<QuadraticForm> matrix_nearness(const json& params, int n, const std::string& where) {
  const int order = integer(require(params, "order", where, "F.builtin.params"), where,
                            "F.builtin.params.order");
  if (order < 1 || svec_dim(order) != n) {
    fail(where, "F.builtin.params.order", "n must equal order*(order+1)/2");
  }
  const Vec c = svec(matrix_of(require(params, "target", where, "F.builtin.params"), order, where,
                               "F.builtin.params.target"));
  std::vector<QuadraticForm> outs;
  outs.push_back({0.5 * c.squaredNorm(), -c, Mat::Identity(n, n)});
  for (int i = 0; i < n; ++i) outs.push_back({0.0, Vec::Unit(n, i), Mat::Zero(n, n)});
  return outs;
}

SmoothMap parse_map(const json& spec, int n, const std::string& where) {
  if (spec.contains("polynomial")) return quadratic_map(n, polynomial_outputs(spec["polynomial"], n, where));
  if (spec.contains("builtin")) {
    const json& b = spec["builtin"];
    const auto id = require(b, "id", where, "F.builtin").get<std::string>();
    const json params = b.contains("params") ? b["params"] : json::object();
    if (id == "affine_pencil") return quadratic_map(n, affine_pencil(params, n, where));
    if (id == "matrix_nearness") return quadratic_map(n, matrix_nearness(params, n, where));
    fail(where, "F.builtin.id", "unknown builtin '" + id + "'");
  }
  fail(where, "F", "expected 'polynomial' or 'builtin'");
}

KKTPoint parse_pair(const json& spec, const std::string& where, const std::string& field, int n,
                    int m) {
  KKTPoint p{vector_of(require(spec, "x", where, field), where, field + ".x"),
             vector_of(require(spec, "mu", where, field), where, field + ".mu")};
  if (p.x.size() != n || p.mu.size() != m) {
    throw DimensionError(where + ": field '" + field + "': expected (n, m) = (" +
                         std::to_string(n) + ", " + std::to_string(m) + "), got (" +
                         std::to_string(p.x.size()) + ", " + std::to_string(p.mu.size()) + ")");
  }
  return p;
}

}  // namespace

ConvexPiece parse_piece(const json& spec, const std::string& where) {
  const auto kind = require(spec, "kind", where, "g").get<std::string>();
  const std::string field = "g(" + kind + ")";
  if (kind == "psd") return ConvexPiece::psd(integer(require(spec, "order", where, field), where, field));
  if (kind == "orthant") {
    const int dim = integer(require(spec, "dim", where, field), where, field + ".dim");
    const auto sign = spec.value("sign", std::string("nonnegative"));
    if (sign != "nonnegative" && sign != "nonpositive") {
      fail(where, field + ".sign", "expected 'nonnegative' or 'nonpositive'");
    }
    return ConvexPiece::orthant(dim, sign == "nonnegative" ? OrthantSign::kNonNegative
                                                          : OrthantSign::kNonPositive);
  }
  if (kind == "box") {
    return ConvexPiece::box(vector_of(require(spec, "lower", where, field), where, field + ".lower"),
                            vector_of(require(spec, "upper", where, field), where, field + ".upper"));
  }
  if (kind == "l1") return ConvexPiece::l1(integer(require(spec, "dim", where, field), where, field));
  if (kind == "epi_lift") return ConvexPiece::epi_lift(parse_piece(require(spec, "inner", where, field), where));
  fail(where, "g.kind", "unknown kind '" + kind + "'");
}

Instance parse_instance(const json& doc, const std::string& where) {
  if (!doc.is_object()) fail(where, "<root>", "expected an object");
  const std::string name = doc.value("name", std::string("unnamed"));
  const int n = integer(require(doc, "n", where, "<root>"), where, "n");
  if (n < 1) fail(where, "n", "must be positive");
  SmoothMap f = parse_map(require(doc, "F", where, "<root>"), n, where);
  const json& g = require(doc, "g", where, "<root>");
  if (!g.is_array() || g.empty()) fail(where, "g", "expected a non-empty block list");
  std::vector<ConvexPiece> blocks;
  for (const auto& b : g) blocks.push_back(parse_piece(b, where));
  int total = 0;
  for (const auto& b : blocks) total += b.dim();
  if (total != f.m()) {
    throw DimensionError(where + ": block dimensions sum to " + std::to_string(total) +
                         " but F has " + std::to_string(f.m()) + " outputs");
  }
  Instance inst{name, CompositeProblem(std::move(f), std::move(blocks)), std::nullopt, std::nullopt};
  const int m = inst.problem.m();
  if (doc.contains("known_solution")) {
    KKTPoint z = parse_pair(doc["known_solution"], where, "known_solution", n, m);
    const KktCheck c = kkt_check(inst.problem, z, 1e-8);
    if (!c.satisfied) {
      throw PreconditionError(where + ": known_solution fails the KKT check (stationarity " +
                              std::to_string(c.stationarity_norm) + ", prox residual " +
                              std::to_string(c.prox_norm) + ")");
    }
    inst.known_solution = std::move(z);
  }
  if (doc.contains("start")) inst.start = parse_pair(doc["start"], where, "start", n, m);
  return inst;
}

Instance parse_instance_text(const std::string& text, const std::string& where) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(where + ": " + e.what());
  }
  return parse_instance(doc, where);
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open instance file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_instance_text(buf.str(), path);
}

KKTPoint parse_point(const std::string& text, int n, int m) {
  const auto semi = text.find(';');
  if (semi == std::string::npos) throw ParseError("point '" + text + "': expected 'x;mu'");
  auto parse_list = [&](const std::string& part) {
    std::vector<double> vals;
    std::stringstream ss(part);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(item, &used));
        if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ParseError("point '" + text + "': bad number '" + item + "'");
      }
    }
    return Vec(Eigen::Map<const Vec>(vals.data(), static_cast<Eigen::Index>(vals.size())));
  };
  KKTPoint p{parse_list(text.substr(0, semi)), parse_list(text.substr(semi + 1))};
  if (p.x.size() != n || p.mu.size() != m) {
    throw DimensionError("point '" + text + "': expected " + std::to_string(n) + " and " +
                         std::to_string(m) + " entries");
  }
  return p;
}

}  // namespace kktstab
