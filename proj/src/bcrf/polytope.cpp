#include "bcrf/polytope.hpp"

#include <cmath>

#include "bcrf/trellis.hpp"

namespace bcrf {

PolytopeReport check_polytope_membership(const MarginalTensor& q, double tol) {
  const ProblemShape& shape = q.shape();
  const TrellisGraph graph(shape);
  const int32_t T = shape.num_tags;

  PolytopeReport report;
  report.tol = tol;
  report.min_entry = q.values().empty() ? 0.0 : q.values()[0];
  for (double v : q.values()) report.min_entry = std::min(report.min_entry, v);

  for (int32_t cluster : graph.interior_clusters()) {
    const int32_t e = graph.entering_slice(cluster);
    const int32_t l = graph.leaving_slice(cluster);
    double entering = 0.0;
    for (int32_t u = 0; u < T; ++u) {
      for (int32_t v = 0; v < T; ++v) entering += q.at(e, u, v);
    }
    report.max_cluster_residual =
        std::max(report.max_cluster_residual, std::abs(entering - 1.0));
    for (int32_t v = 0; v < T; ++v) {
      double in = 0.0, out = 0.0;
      for (int32_t u = 0; u < T; ++u) {
        in += q.at(e, u, v);
        out += q.at(l, v, u);
      }
      report.max_flow_residual =
          std::max(report.max_flow_residual, std::abs(in - out));
    }
  }

  report.pass = report.max_cluster_residual <= tol &&
                report.max_flow_residual <= tol && report.min_entry >= -tol;
  return report;
}

std::optional<TagSequence> is_vertex(const MarginalTensor& q) {
  const ProblemShape& shape = q.shape();
  const int32_t T = shape.num_tags;
  TagSequence x;
  x.tags.assign(shape.n, -1);
  for (int32_t i = 0; i < shape.num_slices(); ++i) {
    int32_t from = -1, to = -1, ones = 0;
    for (int32_t t = 0; t < T; ++t) {
      for (int32_t tp = 0; tp < T; ++tp) {
        double v = q.at(i, t, tp);
        if (v == 1.0) {
          ++ones;
          from = t;
          to = tp;
        } else if (v != 0.0) {
          return std::nullopt;  // not binary
        }
      }
    }
    if (ones != 1) return std::nullopt;
    if (i > 0 && x.tags[i] != from) return std::nullopt;  // inconsistent path
    x.tags[i] = from;
    x.tags[i + 1] = to;
  }
  return x;
}

}  // namespace bcrf
