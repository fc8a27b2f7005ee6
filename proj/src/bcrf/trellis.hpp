#pragma once

#include <cstdint>
#include <vector>

#include "bcrf/shape.hpp"

namespace bcrf {

// Node of the trellis reduction: v_i^t for cluster (position) i in 1..n,
// tag t in 0..|T|-1.
struct TrellisNode {
  int32_t cluster = 0;  // 1-based position
  int32_t tag = 0;
};

// The layered graph of the path reduction. Clusters V_i hold one node per
// tag; arcs connect consecutive clusters only, so adjacency is pure index
// arithmetic: delta^-(V_i) is slice i-1, delta^+(V_i) is slice i (1-based
// slices; stored 0-based as in ProblemShape).
class TrellisGraph {
 public:
  explicit TrellisGraph(const ProblemShape& shape) : shape_(shape) {}

  const ProblemShape& shape() const { return shape_; }

  int64_t num_arcs() const { return shape_.arc_count(); }
  int32_t num_clusters() const { return shape_.n; }

  // 0-based slice of arcs entering cluster i (valid for i in [2, n]).
  int32_t entering_slice(int32_t cluster) const { return cluster - 2; }
  // 0-based slice of arcs leaving cluster i (valid for i in [1, n-1]).
  int32_t leaving_slice(int32_t cluster) const { return cluster - 1; }

  bool has_entering(int32_t cluster) const { return cluster >= 2; }
  bool has_leaving(int32_t cluster) const { return cluster <= shape_.n - 1; }

  // Arc ids of delta^-(v) for v = (cluster, tag); empty for cluster 1.
  std::vector<int64_t> in_arcs(const TrellisNode& v) const {
    std::vector<int64_t> out;
    if (!has_entering(v.cluster)) return out;
    out.reserve(shape_.num_tags);
    for (int32_t u = 0; u < shape_.num_tags; ++u) {
      out.push_back(shape_.arc(entering_slice(v.cluster), u, v.tag));
    }
    return out;
  }

  // Arc ids of delta^+(v); empty for cluster n.
  std::vector<int64_t> out_arcs(const TrellisNode& v) const {
    std::vector<int64_t> out;
    if (!has_leaving(v.cluster)) return out;
    out.reserve(shape_.num_tags);
    for (int32_t u = 0; u < shape_.num_tags; ++u) {
      out.push_back(shape_.arc(leaving_slice(v.cluster), v.tag, u));
    }
    return out;
  }

  // Interior clusters carry the polytope constraints.
  bool is_interior(int32_t cluster) const {
    return cluster >= 2 && cluster <= shape_.n - 1;
  }

  std::vector<int32_t> interior_clusters() const {
    std::vector<int32_t> out;
    for (int32_t i = 2; i <= shape_.n - 1; ++i) out.push_back(i);
    return out;
  }

  // Interior clusters of one parity (odd = odd 1-based index), the unit of
  // one alternating projection sweep.
  std::vector<int32_t> parity_clusters(bool odd) const {
    std::vector<int32_t> out;
    for (int32_t i = 2; i <= shape_.n - 1; ++i) {
      if ((i % 2 == 1) == odd) out.push_back(i);
    }
    return out;
  }

 private:
  ProblemShape shape_;
};

}  // namespace bcrf
