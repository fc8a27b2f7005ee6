#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace cli {

// Deterministic RNG for data generation and shuffling. mt19937_64 has a
// portable bit-exact sequence and the transforms are hand-rolled, so a seed
// produces the same dataset on any platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double normal(double sd) {
    if (have_spare_) {
      have_spare_ = false;
      return spare_ * sd;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2) * sd;
  }

  int64_t uniform_int(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(eng_() %
                                     static_cast<uint64_t>(hi - lo + 1));
  }

  // Marsaglia-Tsang, with the alpha < 1 boost.
  double gamma(double alpha) {
    if (alpha < 1.0) {
      const double u = uniform();
      return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
      double x = normal(1.0);
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
        return d * v;
      }
    }
  }

  std::vector<double> dirichlet(size_t dim, double concentration) {
    std::vector<double> out(dim);
    double sum = 0.0;
    for (double& v : out) {
      v = gamma(concentration);
      sum += v;
    }
    for (double& v : out) v /= sum;
    return out;
  }

  int64_t categorical(const std::vector<double>& probs) {
    double u = uniform();
    double acc = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<int64_t>(i);
    }
    return static_cast<int64_t>(probs.size() - 1);
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1],
                items[static_cast<size_t>(uniform_int(0, i - 1))]);
    }
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cli
