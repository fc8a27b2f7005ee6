#pragma once

#include <optional>

#include "bcrf/types.hpp"

namespace bcrf {

// Residuals of the marginal-polytope description: cluster-entering sums and
// node flow conservation over the interior clusters, plus the smallest entry
// (nonnegativity).
struct PolytopeReport {
  double max_cluster_residual = 0.0;  // max_i |sum_{a in delta^-(V_i)} q_a - 1|
  double max_flow_residual = 0.0;     // max_v |in(v) - out(v)|
  double min_entry = 0.0;
  double tol = 0.0;
  bool pass = false;
};

PolytopeReport check_polytope_membership(const MarginalTensor& q, double tol);

// The labeling corresponding to q iff q is a binary feasible point (a vertex
// of the polytope); nullopt otherwise.
std::optional<TagSequence> is_vertex(const MarginalTensor& q);

}  // namespace bcrf
