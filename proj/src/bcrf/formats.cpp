#include "bcrf/formats.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bcrf/logspace.hpp"

namespace bcrf {

namespace {

std::string shortest_decimal(double v) {
  if (is_neg_inf(v)) return "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

[[noreturn]] void format_fail(int64_t line, const std::string& what) {
  fail(ErrorKind::kFormat, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

void write_wtensor(std::ostream& out, const ProblemShape& shape,
                   std::span<const double> values) {
  if (static_cast<int64_t>(values.size()) != shape.arc_count()) {
    fail(ErrorKind::kInvalidArgument, "value count does not match the shape");
  }
  out << "wtensor v1 " << shape.n << ' ' << shape.num_tags << '\n';
  for (int32_t i = 0; i < shape.num_slices(); ++i) {
    for (int32_t t = 0; t < shape.num_tags; ++t) {
      for (int32_t tp = 0; tp < shape.num_tags; ++tp) {
        out << (i + 1) << ' ' << t << ' ' << tp << ' '
            << shortest_decimal(values[shape.arc(i, t, tp)]) << '\n';
      }
    }
  }
}

std::string format_wtensor(const ProblemShape& shape,
                           std::span<const double> values) {
  std::ostringstream out;
  write_wtensor(out, shape, values);
  return out.str();
}

void write_wtensor_file(const std::string& path, const ProblemShape& shape,
                        std::span<const double> values) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot open " + path + " for writing");
  write_wtensor(out, shape, values);
  if (!out) fail(ErrorKind::kIo, "write to " + path + " failed");
}

bool read_wtensor(std::istream& in, ParsedTensor& out) {
  std::string line;
  int64_t line_no = 0;
  // header, skipping blank lines between blocks
  while (true) {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty()) break;
  }
  std::istringstream header(line);
  std::string magic, version;
  int64_t n = 0, num_tags = 0;
  if (!(header >> magic >> version >> n >> num_tags) || magic != "wtensor" ||
      version != "v1") {
    format_fail(line_no, "expected header 'wtensor v1 <n> <num_tags>'");
  }
  if (n < 3 || num_tags < 1 || n > (1 << 20) || num_tags > (1 << 16)) {
    format_fail(line_no, "invalid dimensions in header");
  }
  ProblemShape shape(static_cast<int32_t>(n), static_cast<int32_t>(num_tags));

  std::vector<double> values(shape.arc_count(), 0.0);
  std::vector<uint8_t> seen(shape.arc_count(), 0);
  for (int64_t k = 0; k < shape.arc_count(); ++k) {
    if (!std::getline(in, line)) {
      format_fail(line_no, "unexpected end of tensor block");
    }
    ++line_no;
    std::istringstream fields(line);
    int64_t i = 0, t = 0, tp = 0;
    std::string value_text;
    if (!(fields >> i >> t >> tp >> value_text)) {
      format_fail(line_no, "expected 'i t t_next value'");
    }
    std::string extra;
    if (fields >> extra) format_fail(line_no, "trailing fields");
    if (i < 1 || i > shape.num_slices() || t < 0 || t >= num_tags || tp < 0 ||
        tp >= num_tags) {
      format_fail(line_no, "arc index out of range");
    }
    double v;
    if (value_text == "-inf") {
      v = kNegInf;
    } else {
      auto res = std::from_chars(value_text.data(),
                                 value_text.data() + value_text.size(), v);
      if (res.ec != std::errc{} ||
          res.ptr != value_text.data() + value_text.size()) {
        format_fail(line_no, "unparsable value '" + value_text + "'");
      }
      if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
        format_fail(line_no, "value must be finite or -inf");
      }
    }
    const int64_t arc = shape.arc(static_cast<int32_t>(i - 1),
                                  static_cast<int32_t>(t),
                                  static_cast<int32_t>(tp));
    if (seen[arc]) format_fail(line_no, "duplicate arc");
    seen[arc] = 1;
    values[arc] = v;
  }
  out.shape = shape;
  out.values = std::move(values);
  return true;
}

ParsedTensor read_wtensor_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path);
  ParsedTensor out;
  if (!read_wtensor(in, out)) {
    fail(ErrorKind::kFormat, path + ": empty tensor file");
  }
  return out;
}

}  // namespace bcrf
