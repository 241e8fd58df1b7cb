#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kktstab/newton.hpp"
#include "kktstab/problem.hpp"
#include "kktstab/prox.hpp"

namespace kktstab {

struct KktCheck {
  bool satisfied = false;
  Vec stationarity;   // F'(x)^T mu
  Vec prox_residual;  // mu - Prox_{g*}(F(x) + mu)
  double stationarity_norm = 0.0;  // infinity norms
  double prox_norm = 0.0;
};

// Element of the generalized Jacobian of R in the sign convention
// [[H, J^T], [(I - U) J, -U]]; the derivative of R itself has the second row block negated.
struct JacobianElementR {
  Mat matrix;
  std::vector<std::string> provenance;
};

Vec residual(const CompositeProblem& problem, const KKTPoint& z);
KktCheck kkt_check(const CompositeProblem& problem, const KKTPoint& z, double tol);

// Blockwise Prox_g and its canonical generalized-Jacobian elements at w.
Vec prox_g(const CompositeProblem& problem, const Vec& w);
std::vector<LinearOperatorElement> canonical_elements(const CompositeProblem& problem, const Vec& w);

JacobianElementR assemble_element(const CompositeProblem& problem, const KKTPoint& z,
                                  const std::vector<LinearOperatorElement>& prox_elements);
// Flip the second row block: element form <-> derivative of the residual.
Mat residual_jacobian(const JacobianElementR& element, int n);

std::vector<JacobianElementR> sample_elements_R(const CompositeProblem& problem, const KKTPoint& z,
                                                int count, std::uint64_t seed);

Vec linearized_residual(const CompositeProblem& problem, const KKTPoint& zbar, const KKTPoint& z);

// Solution of the canonically perturbed linearized generalized equation at zbar.
// Throws ConvergenceError when the inner Newton run fails.
KKTPoint solve_linearized_ge(const CompositeProblem& problem, const KKTPoint& zbar,
                             const Vec& delta, const KKTPoint& start, const NewtonOptions& opts);

}  // namespace kktstab
