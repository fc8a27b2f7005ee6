#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "bcrf/bcrf.h"

namespace cli {

// Process exit codes: 0 success, 2 format error, 3 infeasible mask/weights,
// 4 config conflict, 1 anything else.
inline int exit_code_for(bcrf_status st) {
  switch (st) {
    case BCRF_OK:
      return 0;
    case BCRF_ERR_FORMAT:
      return 2;
    case BCRF_ERR_INFEASIBLE:
      return 3;
    case BCRF_ERR_CONFIG:
      return 4;
    default:
      return 1;
  }
}

class CliError : public std::runtime_error {
 public:
  CliError(int exit_code, const std::string& message)
      : std::runtime_error(message), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

inline void check(bcrf_status st, const char* what) {
  if (st != BCRF_OK) {
    throw CliError(exit_code_for(st),
                   std::string(what) + ": " + bcrf_last_error());
  }
}

struct WeightsHandle {
  bcrf_weights* ptr = nullptr;

  WeightsHandle() = default;
  WeightsHandle(int32_t n, int32_t num_tags, const std::vector<double>& values) {
    check(bcrf_weights_create(n, num_tags, values.data(), &ptr),
          "weight tensor");
  }
  explicit WeightsHandle(bcrf_weights* raw) : ptr(raw) {}
  WeightsHandle(WeightsHandle&& other) noexcept : ptr(other.ptr) {
    other.ptr = nullptr;
  }
  WeightsHandle& operator=(WeightsHandle&& other) noexcept {
    if (this != &other) {
      bcrf_weights_free(ptr);
      ptr = other.ptr;
      other.ptr = nullptr;
    }
    return *this;
  }
  WeightsHandle(const WeightsHandle&) = delete;
  WeightsHandle& operator=(const WeightsHandle&) = delete;
  ~WeightsHandle() { bcrf_weights_free(ptr); }
};

struct MaskHandle {
  bcrf_mask* ptr = nullptr;

  MaskHandle() = default;
  MaskHandle(int32_t n, int32_t num_tags, const std::vector<uint8_t>& allowed) {
    check(bcrf_mask_create(n, num_tags, allowed.data(), &ptr),
          "transition mask");
  }
  MaskHandle(MaskHandle&& other) noexcept : ptr(other.ptr) {
    other.ptr = nullptr;
  }
  MaskHandle& operator=(MaskHandle&& other) noexcept {
    if (this != &other) {
      bcrf_mask_free(ptr);
      ptr = other.ptr;
      other.ptr = nullptr;
    }
    return *this;
  }
  MaskHandle(const MaskHandle&) = delete;
  MaskHandle& operator=(const MaskHandle&) = delete;
  ~MaskHandle() { bcrf_mask_free(ptr); }
};

}  // namespace cli
