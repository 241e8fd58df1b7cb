#include "kktstab/convex_piece.hpp"

#include <sstream>

#include "kktstab/errors.hpp"

namespace kktstab {

ConvexPiece ConvexPiece::psd(int order) {
  if (order < 1) throw DimensionError("psd_indicator: order must be >= 1");
  return ConvexPiece(PsdIndicator{order}, svec_dim(order));
}

ConvexPiece ConvexPiece::orthant(int dim, OrthantSign sign) {
  if (dim < 1) throw DimensionError("orthant_indicator: dim must be >= 1");
  return ConvexPiece(OrthantIndicator{dim, sign}, dim);
}

ConvexPiece ConvexPiece::box(Vec lower, Vec upper) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw DimensionError("box_indicator: lower has " + std::to_string(lower.size()) +
                         " entries, upper has " + std::to_string(upper.size()));
  }
  if ((lower.array() > upper.array()).any()) {
    throw PreconditionError("box_indicator: lower bound exceeds upper bound");
  }
  const int dim = static_cast<int>(lower.size());
  return ConvexPiece(BoxIndicator{std::move(lower), std::move(upper)}, dim);
}

ConvexPiece ConvexPiece::l1(int dim) {
  if (dim < 1) throw DimensionError("l1_norm: dim must be >= 1");
  return ConvexPiece(L1Norm{dim}, dim);
}

ConvexPiece ConvexPiece::epi_lift(ConvexPiece inner) {
  const int dim = 1 + inner.dim();
  return ConvexPiece(EpiLift{std::make_shared<const ConvexPiece>(std::move(inner))}, dim);
}

bool ConvexPiece::is_polyhedral() const {
  if (auto e = as<EpiLift>()) return e->inner->is_polyhedral();
  return !std::holds_alternative<PsdIndicator>(kind_);
}

bool ConvexPiece::is_separable() const {
  return std::holds_alternative<OrthantIndicator>(kind_) ||
         std::holds_alternative<BoxIndicator>(kind_) || std::holds_alternative<L1Norm>(kind_);
}

std::string ConvexPiece::describe() const {
  std::ostringstream out;
  if (auto p = as<PsdIndicator>()) {
    out << "psd_indicator(" << p->order << ")";
  } else if (auto o = as<OrthantIndicator>()) {
    out << "orthant_indicator(" << o->dim << ", "
        << (o->sign == OrthantSign::kNonNegative ? ">=0" : "<=0") << ")";
  } else if (auto b = as<BoxIndicator>()) {
    out << "box_indicator(" << b->lower.size() << ")";
  } else if (auto l = as<L1Norm>()) {
    out << "l1_norm(" << l->dim << ")";
  } else if (auto e = as<EpiLift>()) {
    out << "epi_lift(" << e->inner->describe() << ")";
  }
  return out.str();
}

}  // namespace kktstab
