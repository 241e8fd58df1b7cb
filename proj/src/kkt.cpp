#include "kktstab/kkt.hpp"

#include <algorithm>

#include "kktstab/rng.hpp"

namespace kktstab {

CompositeProblem::CompositeProblem(SmoothMap f, std::vector<ConvexPiece> blocks)
    : f_(std::move(f)), blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw DimensionError("CompositeProblem: at least one block is required");
  int total = 0;
  for (const auto& b : blocks_) {
    offsets_.push_back(total);
    total += b.dim();
  }
  if (total != f_.m()) {
    throw DimensionError("CompositeProblem: block dimensions sum to " + std::to_string(total) +
                         " but F has m = " + std::to_string(f_.m()));
  }
}

Vec KKTPoint::stacked() const {
  Vec z(x.size() + mu.size());
  z << x, mu;
  return z;
}

KKTPoint KKTPoint::unstack(const Vec& z, int n) {
  return {z.head(n), z.tail(z.size() - n)};
}

namespace {

void check_point(const CompositeProblem& p, const KKTPoint& z) {
  if (z.x.size() != p.n() || z.mu.size() != p.m()) {
    throw DimensionError("KKT point has (" + std::to_string(z.x.size()) + ", " +
                         std::to_string(z.mu.size()) + ") entries, problem needs (" +
                         std::to_string(p.n()) + ", " + std::to_string(p.m()) + ")");
  }
}

Mat stack_blocks(const CompositeProblem& p, const std::vector<LinearOperatorElement>& elems) {
  if (elems.size() != p.blocks().size()) {
    throw DimensionError("expected " + std::to_string(p.blocks().size()) + " prox elements, got " +
                         std::to_string(elems.size()));
  }
  std::vector<Mat> mats;
  for (std::size_t b = 0; b < elems.size(); ++b) {
    const auto d = p.blocks()[b].dim();
    if (elems[b].matrix.rows() != d || elems[b].matrix.cols() != d) {
      throw DimensionError("prox element for block " + std::to_string(b) + " is not " +
                           std::to_string(d) + "x" + std::to_string(d));
    }
    mats.push_back(elems[b].matrix);
  }
  return block_diagonal(mats);
}

Mat element_matrix(const Mat& h, const Mat& j, const Mat& u) {
  const auto n = h.rows(), m = j.rows();
  Mat e(n + m, n + m);
  e.topLeftCorner(n, n) = h;
  e.topRightCorner(n, m) = j.transpose();
  e.bottomLeftCorner(m, n) = (Mat::Identity(m, m) - u) * j;
  e.bottomRightCorner(m, m) = -u;
  return e;
}

}  // namespace

Vec prox_g(const CompositeProblem& problem, const Vec& w) {
  Vec out(w.size());
  for (std::size_t b = 0; b < problem.blocks().size(); ++b) {
    const auto& piece = problem.blocks()[b];
    const int off = problem.offset(b);
    out.segment(off, piece.dim()) = prox(piece, w.segment(off, piece.dim()));
  }
  return out;
}

std::vector<LinearOperatorElement> canonical_elements(const CompositeProblem& problem,
                                                      const Vec& w) {
  std::vector<LinearOperatorElement> out;
  for (std::size_t b = 0; b < problem.blocks().size(); ++b) {
    const auto& piece = problem.blocks()[b];
    out.push_back(clarke_element(piece, w.segment(problem.offset(b), piece.dim())));
  }
  return out;
}

Vec residual(const CompositeProblem& problem, const KKTPoint& z) {
  check_point(problem, z);
  const Vec fx = problem.F().eval(z.x);
  const Mat j = problem.F().jacobian(z.x);
  const Vec w = fx + z.mu;
  // Prox of g* through the Moreau identity: Prox_{g*}(w) = w - Prox_g(w).
  const Vec conj = w - prox_g(problem, w);
  Vec r(problem.n() + problem.m());
  r << j.transpose() * z.mu, z.mu - conj;
  return r;
}

KktCheck kkt_check(const CompositeProblem& problem, const KKTPoint& z, double tol) {
  const Vec r = residual(problem, z);
  KktCheck c;
  c.stationarity = r.head(problem.n());
  c.prox_residual = r.tail(problem.m());
  c.stationarity_norm = c.stationarity.lpNorm<Eigen::Infinity>();
  c.prox_norm = c.prox_residual.lpNorm<Eigen::Infinity>();
  c.satisfied = std::max(c.stationarity_norm, c.prox_norm) <= tol;
  return c;
}

JacobianElementR assemble_element(const CompositeProblem& problem, const KKTPoint& z,
                                  const std::vector<LinearOperatorElement>& prox_elements) {
  check_point(problem, z);
  const Mat u = stack_blocks(problem, prox_elements);
  JacobianElementR e;
  e.matrix = element_matrix(problem.F().weighted_hessian(z.x, z.mu), problem.F().jacobian(z.x), u);
  for (const auto& p : prox_elements) e.provenance.push_back(p.provenance);
  return e;
}

Mat residual_jacobian(const JacobianElementR& element, int n) {
  Mat d = element.matrix;
  const auto m = d.rows() - n;
  d.bottomRows(m) = -d.bottomRows(m);
  return d;
}

std::vector<JacobianElementR> sample_elements_R(const CompositeProblem& problem, const KKTPoint& z,
                                                int count, std::uint64_t seed) {
  if (count < 1) throw PreconditionError("sample_elements_R: count must be >= 1");
  check_point(problem, z);
  const Vec w = problem.F().eval(z.x) + z.mu;
  const std::size_t nblocks = problem.blocks().size();
  std::vector<std::vector<LinearOperatorElement>> lists;
  for (std::size_t b = 0; b < nblocks; ++b) {
    const auto& piece = problem.blocks()[b];
    lists.push_back(sample_clarke(piece, w.segment(problem.offset(b), piece.dim()), count,
                                  derive_seed(seed, b)));
  }
  std::size_t total = 1;
  for (const auto& l : lists) {
    total = std::min<std::size_t>(total * l.size(), static_cast<std::size_t>(count) + 1);
  }
  std::vector<std::vector<std::size_t>> tuples;
  if (total <= static_cast<std::size_t>(count)) {
    std::vector<std::size_t> idx(nblocks, 0);
    for (std::size_t t = 0; t < total; ++t) {
      tuples.push_back(idx);
      for (std::size_t b = 0; b < nblocks; ++b) {
        if (++idx[b] < lists[b].size()) break;
        idx[b] = 0;
      }
    }
  } else {
    Rng rng(derive_seed(seed, nblocks + 1));
    tuples.emplace_back(nblocks, 0);
    for (int t = 1; t < count; ++t) {
      std::vector<std::size_t> idx(nblocks);
      for (std::size_t b = 0; b < nblocks; ++b) {
        idx[b] = static_cast<std::size_t>(rng.below(static_cast<int>(lists[b].size())));
      }
      tuples.push_back(std::move(idx));
    }
  }
  const Mat h = problem.F().weighted_hessian(z.x, z.mu);
  const Mat j = problem.F().jacobian(z.x);
  std::vector<JacobianElementR> out;
  for (const auto& idx : tuples) {
    std::vector<LinearOperatorElement> pick;
    for (std::size_t b = 0; b < nblocks; ++b) pick.push_back(lists[b][idx[b]]);
    JacobianElementR e;
    e.matrix = element_matrix(h, j, stack_blocks(problem, pick));
    for (const auto& p : pick) e.provenance.push_back(p.provenance);
    const bool seen = std::any_of(out.begin(), out.end(), [&](const auto& k) {
      return (k.matrix - e.matrix).norm() <= 1e-12;
    });
    if (!seen) out.push_back(std::move(e));
  }
  return out;
}

Vec linearized_residual(const CompositeProblem& problem, const KKTPoint& zbar, const KKTPoint& z) {
  check_point(problem, zbar);
  check_point(problem, z);
  const Vec fbar = problem.F().eval(zbar.x);
  const Mat jbar = problem.F().jacobian(zbar.x);
  const Mat hbar = problem.F().weighted_hessian(zbar.x, zbar.mu);
  const Vec dx = z.x - zbar.x;
  const Vec w = fbar + jbar * dx + z.mu;
  Vec r(problem.n() + problem.m());
  r << hbar * dx + jbar.transpose() * (z.mu - zbar.mu), z.mu - (w - prox_g(problem, w));
  return r;
}

KKTPoint solve_linearized_ge(const CompositeProblem& problem, const KKTPoint& zbar,
                             const Vec& delta, const KKTPoint& start, const NewtonOptions& opts) {
  const int n = problem.n(), m = problem.m();
  if (delta.size() != n + m) {
    throw DimensionError("solve_linearized_ge: perturbation has " + std::to_string(delta.size()) +
                         " entries, expected " + std::to_string(n + m));
  }
  if (!kkt_check(problem, zbar, 1e-8).satisfied) {
    throw PreconditionError("solve_linearized_ge: base point is not a KKT point");
  }
  const Vec fbar = problem.F().eval(zbar.x);
  const Mat jbar = problem.F().jacobian(zbar.x);
  const Mat hbar = problem.F().weighted_hessian(zbar.x, zbar.mu);
  const Vec d1 = delta.head(n), d2 = delta.tail(m);
  // delta in the GE  <=>  R~(x, mu + d2) = (d1 + J^T d2, d2).
  Vec target(n + m);
  target << d1 + jbar.transpose() * d2, d2;

  auto res = [&](const Vec& v) {
    return Vec(linearized_residual(problem, zbar, KKTPoint::unstack(v, n)) - target);
  };
  auto jac = [&](const Vec& v) {
    const KKTPoint p = KKTPoint::unstack(v, n);
    const Vec w = fbar + jbar * (p.x - zbar.x) + p.mu;
    const Mat u = stack_blocks(problem, canonical_elements(problem, w));
    JacobianElementR e{element_matrix(hbar, jbar, u), {}};
    return residual_jacobian(e, n);
  };
  Vec shifted = start.stacked();
  shifted.tail(m) += d2;
  const auto result = newton_iterate(res, jac, shifted, opts);
  KKTPoint out = KKTPoint::unstack(result.z, n);
  out.mu -= d2;
  return out;
}

}  // namespace kktstab
