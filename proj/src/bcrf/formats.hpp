#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bcrf/shape.hpp"

namespace bcrf {

// Text tensor format, one tensor per block:
//   wtensor v1 <n> <num_tags>
//   i t t' value            (one line per arc, i 1-based, tags 0-based)
// Values are printed as shortest round-trip decimals; "-inf" is the literal
// for forbidden arcs. Weight tensors and marginal dumps share the format.

void write_wtensor(std::ostream& out, const ProblemShape& shape,
                   std::span<const double> values);
std::string format_wtensor(const ProblemShape& shape,
                           std::span<const double> values);
void write_wtensor_file(const std::string& path, const ProblemShape& shape,
                        std::span<const double> values);

struct ParsedTensor {
  ProblemShape shape;
  std::vector<double> values;
};

// Reads one tensor block; skips leading blank lines; fails with the line
// number on malformed input. Returns false at a clean end of stream.
bool read_wtensor(std::istream& in, ParsedTensor& out);
ParsedTensor read_wtensor_file(const std::string& path);

}  // namespace bcrf
