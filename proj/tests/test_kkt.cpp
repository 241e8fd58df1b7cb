#include <cmath>

#include "kktstab/checks.hpp"
#include "kktstab/errors.hpp"
#include "kktstab/instance.hpp"
#include "kktstab/kkt.hpp"
#include "kktstab/rng.hpp"
#include "support.hpp"

using namespace kktstab;
using namespace kktstab::test;

namespace {

Instance fixture(const std::string& name) { return load_instance(resolve_instance_path(name)); }

// F(x) = x with g = |.| on the real line.
CompositeProblem scalar_l1() {
  return CompositeProblem(quadratic_map(1, {{0.0, vec({1.0}), Mat::Zero(1, 1)}}), {ConvexPiece::l1(1)});
}

KKTPoint point(std::initializer_list<double> x, std::initializer_list<double> mu) { return {vec(x), vec(mu)}; }

double inf_norm(const Vec& v) { return v.lpNorm<Eigen::Infinity>(); }

}  // namespace

TEST_CASE("residual vanishes at the hand-solved points") {
  CHECK(inf_norm(residual(fixture("nlp_toy").problem, point({1.0}, {1.0, 1.0}))) <= 1e-12);
  const Vec sdp_mu = (Vec(4) << 1.0, svec(diag({-1.0, 0.0}))).finished();
  CHECK(inf_norm(residual(fixture("sdp_toy").problem, {vec({0.0}), sdp_mu})) <= 1e-12);
  CHECK(inf_norm(residual(scalar_l1(), point({0.0}, {0.0}))) == 0.0);
  for (const auto& name : battery_names()) {
    const Instance inst = fixture(name);
    REQUIRE(inst.known_solution.has_value());
    INFO(name);
    CHECK(inf_norm(residual(inst.problem, *inst.known_solution)) <= 1e-12);
  }
}

TEST_CASE("residual and kkt_check reject mismatched dimensions") {
  const CompositeProblem p = fixture("nlp_toy").problem;
  CHECK_THROWS_AS(residual(p, point({1.0, 2.0}, {1.0, 1.0})), DimensionError);
  CHECK_THROWS_AS(kkt_check(p, point({1.0}, {1.0}), 1e-8), DimensionError);
}

TEST_CASE("kkt_check reports both residual blocks") {
  const CompositeProblem p = fixture("nlp_toy").problem;
  CHECK(kkt_check(p, point({1.0}, {1.0, 1.0}), 1e-10).satisfied);

  // At x = 1.1: stationarity 1.1 * 1 - 1 = 0.1, and Prox_{g*}(1.605, 0.9) = (1, 0.9).
  const KktCheck off = kkt_check(p, point({1.1}, {1.0, 1.0}), 1e-10);
  CHECK_FALSE(off.satisfied);
  CHECK(off.stationarity[0] == doctest::Approx(0.1));
  CHECK(off.stationarity_norm == doctest::Approx(0.1));
  CHECK(off.prox_residual[0] == doctest::Approx(0.0));
  CHECK(off.prox_residual[1] == doctest::Approx(0.1));

  Rng rng(4);
  for (const auto& name : battery_names()) {
    const Instance inst = fixture(name);
    const KKTPoint z{rng.normal_vector(inst.problem.n()), rng.normal_vector(inst.problem.m())};
    CHECK_FALSE(kkt_check(inst.problem, z, 0.0).satisfied);
  }
}

TEST_CASE("smooth map derivatives agree with finite differences") {
  Rng rng(5);
  for (const auto& name : battery_names()) {
    const Instance inst = fixture(name);
    const SmoothMap& f = inst.problem.F();
    for (int t = 0; t < 5; ++t) {
      const Vec x = rng.normal_vector(f.n()), mu = rng.normal_vector(f.m());
      const Mat jac = f.jacobian(x);
      Mat fd(f.m(), f.n());
      for (int j = 0; j < f.n(); ++j) {
        const double h = 1e-6 * (1.0 + x.norm());
        const Vec e = Vec::Unit(f.n(), j);
        fd.col(j) = (f.eval(x + h * e) - f.eval(x - h * e)) / (2 * h);
      }
      CHECK((fd - jac).norm() <= 1e-6 * (1.0 + jac.norm()));
      const Mat hess = f.weighted_hessian(x, mu);
      CHECK((hess - hess.transpose()).norm() <= 1e-10);
      CHECK((f.weighted_hessian_fd(x, mu) - hess).norm() <= 1e-6 * (1.0 + hess.norm()));
    }
  }
}

TEST_CASE("finite-difference Hessian fallback") {
  // F(x) = (x0^2 x1, sin x1) with no analytic Hessian.
  const SmoothMap f(
      2, 2, [](const Vec& x) { return vec({x[0] * x[0] * x[1], std::sin(x[1])}); },
      [](const Vec& x) {
        Mat j(2, 2);
        j << 2 * x[0] * x[1], x[0] * x[0], 0.0, std::cos(x[1]);
        return j;
      });
  CHECK_FALSE(f.has_analytic_hessian());
  const Vec x = vec({0.7, -0.4}), mu = vec({1.5, 2.0});
  Mat exact(2, 2);
  exact << 2 * x[1] * mu[0], 2 * x[0] * mu[0], 2 * x[0] * mu[0], -std::sin(x[1]) * mu[1];
  const Mat h = f.weighted_hessian(x, mu);
  CHECK((h - exact).norm() <= 1e-7);
  CHECK((h - h.transpose()).norm() <= 1e-10);
}

TEST_CASE("assembled element examples") {
  const CompositeProblem l1 = scalar_l1();
  const KKTPoint origin = point({0.0}, {0.0});
  const JacobianElementR e = assemble_element(l1, origin, canonical_elements(l1, Vec::Zero(1)));
  Mat expect(2, 2);
  expect << 0.0, 1.0, 1.0, 0.0;
  CHECK(dist(e.matrix, expect) == 0.0);
  CHECK(e.matrix.determinant() == doctest::Approx(-1.0));

  const Instance nlp = fixture("nlp_toy");
  const KKTPoint& zs = *nlp.known_solution;
  const Vec w = nlp.problem.F().eval(zs.x) + zs.mu;
  const JacobianElementR en = assemble_element(nlp.problem, zs, canonical_elements(nlp.problem, w));
  CHECK(en.matrix.rows() == 3);
  CHECK(min_singular_value(en.matrix) > 0.1);

  // Identity prox element: second row block is exactly -dmu.
  const CompositeProblem psd(quadratic_map(1, {{0.0, vec({1.0}), Mat::Zero(1, 1)},
                                               {0.0, vec({0.0}), Mat::Zero(1, 1)},
                                               {0.0, vec({-1.0}), Mat::Zero(1, 1)}}),
                             {ConvexPiece::psd(2)});
  const KKTPoint zp{vec({0.5}), svec(diag({2.0, 1.0}))};
  const Vec wp = psd.F().eval(zp.x) + zp.mu;
  const JacobianElementR ep = assemble_element(psd, zp, canonical_elements(psd, wp));
  CHECK(ep.matrix.block(1, 0, 3, 1).norm() == 0.0);
  CHECK(dist(Mat(ep.matrix.block(1, 1, 3, 3)), Mat(-Mat::Identity(3, 3))) < 1e-14);

  CHECK_THROWS_AS(assemble_element(l1, origin, {}), DimensionError);
}

TEST_CASE("element and residual derivative sign relation") {
  const Instance nlp = fixture("nlp_toy");
  const KKTPoint& zs = *nlp.known_solution;
  const JacobianElementR e =
      assemble_element(nlp.problem, zs, canonical_elements(nlp.problem, nlp.problem.F().eval(zs.x) + zs.mu));
  const Mat d = residual_jacobian(e, 1);
  CHECK(dist(Mat(d.topRows(1)), Mat(e.matrix.topRows(1))) == 0.0);
  CHECK(dist(Mat(d.bottomRows(2)), Mat(-e.matrix.bottomRows(2))) == 0.0);
  CHECK(std::abs(std::abs(d.determinant()) - std::abs(e.matrix.determinant())) < 1e-12);
}

TEST_CASE("elements match directional differences of the residual at smooth points") {
  Rng rng(6);
  for (const auto& name : battery_names()) {
    const Instance inst = fixture(name);
    const CompositeProblem& p = inst.problem;
    for (int t = 0; t < 10; ++t) {
      const KKTPoint z{rng.normal_vector(p.n()), rng.normal_vector(p.m())};
      const Vec w = p.F().eval(z.x) + z.mu;
      const Mat d = residual_jacobian(assemble_element(p, z, canonical_elements(p, w)), p.n());
      const Vec dir = rng.normal_vector(p.n() + p.m());
      const double h = 1e-6;
      const Vec zs = z.stacked();
      const Vec fd = (residual(p, KKTPoint::unstack(zs + h * dir, p.n())) -
                      residual(p, KKTPoint::unstack(zs - h * dir, p.n()))) /
                     (2 * h);
      INFO(name);
      CHECK((d * dir - fd).norm() <= 1e-5 * (1.0 + fd.norm()));
    }
  }
}

TEST_CASE("sample_elements_R") {
  const CompositeProblem l1 = scalar_l1();
  CHECK(sample_elements_R(l1, point({0.0}, {0.0}), 8, 1).size() == 1);

  const Instance kink = fixture("l1_kink");
  const auto ks = sample_elements_R(kink.problem, *kink.known_solution, 16, 3);
  CHECK(ks.size() >= 3);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    for (std::size_t j = i + 1; j < ks.size(); ++j) CHECK(dist(ks[i].matrix, ks[j].matrix) > 1e-12);
  }
  const auto again = sample_elements_R(kink.problem, *kink.known_solution, 16, 3);
  REQUIRE(again.size() == ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    CHECK(again[i].matrix == ks[i].matrix);
    CHECK(again[i].provenance == ks[i].provenance);
  }

  // The canonical element is always present and listed first.
  const KKTPoint& zk = *kink.known_solution;
  const JacobianElementR canon = assemble_element(
      kink.problem, zk, canonical_elements(kink.problem, kink.problem.F().eval(zk.x) + zk.mu));
  CHECK(ks.front().matrix == canon.matrix);

  CHECK_THROWS_AS(sample_elements_R(l1, point({0.0}, {0.0}), 0, 1), PreconditionError);
}

TEST_CASE("linearized residual") {
  const Instance nlp = fixture("nlp_toy");
  const KKTPoint& zb = *nlp.known_solution;
  CHECK(inf_norm(linearized_residual(nlp.problem, zb, zb)) <= 1e-14);

  // Hand expansion: H = 1, J = (1, -1), Prox_{g*}(1.5 + h, 1 - h) = (1, 1 - h), so R~ = (h, 0, h).
  for (double h : {0.1, 0.01, -0.05}) {
    const Vec r = linearized_residual(nlp.problem, zb, point({1.0 + h}, {1.0, 1.0}));
    CHECK(dist(r, vec({h, 0.0, h})) < 1e-14);
  }
  CHECK_THROWS_AS(linearized_residual(nlp.problem, zb, point({1.0}, {1.0})), DimensionError);
}

TEST_CASE("linearization error is second order") {
  Rng rng(7);
  for (const char* name : {"nlp_toy", "smooth_control", "l1_kink"}) {
    const Instance inst = fixture(name);
    const KKTPoint& zb = *inst.known_solution;
    const int n = inst.problem.n();
    const Vec dir = rng.unit_sphere(n + inst.problem.m());
    std::vector<double> ls, le;
    for (double s = 1e-1; s >= 0.99e-5; s /= 10.0) {
      const KKTPoint z = KKTPoint::unstack(zb.stacked() + s * dir, n);
      const double err = (linearized_residual(inst.problem, zb, z) - residual(inst.problem, z)).norm();
      ls.push_back(std::log10(s));
      le.push_back(std::log10(err));
    }
    REQUIRE(ls.size() == 5);
    const double slope = (le.back() - le.front()) / (ls.back() - ls.front());
    INFO(name);
    CHECK(slope >= 1.9);
  }
}

TEST_CASE("perturbed linearized equation") {
  for (const auto& name : battery_names()) {
    const Instance inst = fixture(name);
    const KKTPoint& zb = *inst.known_solution;
    const KKTPoint got =
        solve_linearized_ge(inst.problem, zb, Vec::Zero(inst.problem.n() + inst.problem.m()), zb, {});
    INFO(name);
    CHECK(dist(got.stacked(), zb.stacked()) <= 1e-10);
  }

  // Scalar l1: mu = d1 from stationarity, and x + d2 in the normal cone of [-1, 1] at d1, so x = -d2.
  const CompositeProblem l1 = scalar_l1();
  const KKTPoint zero = point({0.0}, {0.0});
  for (const auto& [d1, d2] : {std::pair{0.3, -0.2}, std::pair{-0.7, 0.5}, std::pair{0.0, 0.1}}) {
    const KKTPoint got = solve_linearized_ge(l1, zero, vec({d1, d2}), zero, {});
    CHECK(got.mu[0] == doctest::Approx(d1).epsilon(1e-10));
    CHECK(got.x[0] == doctest::Approx(-d2).epsilon(1e-10));
  }

  const Instance nlp = fixture("nlp_toy");
  const KKTPoint& zb = *nlp.known_solution;
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    const Vec delta = 1e-3 * rng.unit_ball(3);
    const KKTPoint got = solve_linearized_ge(nlp.problem, zb, delta, zb, {});
    CHECK(dist(got.stacked(), zb.stacked()) <= 10.0 * delta.norm() + 1e-12);
  }

  CHECK_THROWS_AS(solve_linearized_ge(nlp.problem, point({1.5}, {1.0, 1.0}), Vec::Zero(3), zb, {}),
                  PreconditionError);
}
