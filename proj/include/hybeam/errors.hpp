// SPDX-License-Identifier: Apache-2.0
#ifndef HYBEAM_ERRORS_HPP
#define HYBEAM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hybeam {

// Precondition / dimension violations. Maps to CLI exit code 2.
class contract_error : public std::invalid_argument {
 public:
  explicit contract_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Bad run configuration (missing model, incompatible dims). Exit code 2.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Iterative method failed to converge, loss diverged, etc. Exit code 3.
class numeric_error : public std::runtime_error {
 public:
  numeric_error(const std::string& msg, long iterations = -1)
      : std::runtime_error(msg), iterations_(iterations) {}
  long iterations() const { return iterations_; }

 private:
  long iterations_;
};

// Malformed or truncated file. Exit code 4.
class format_error : public std::runtime_error {
 public:
  explicit format_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Enumeration budget exceeded (e.g. too many antenna subsets). Exit code 2.
class budget_error : public std::runtime_error {
 public:
  budget_error(const std::string& msg, unsigned long long count)
      : std::runtime_error(msg), count_(count) {}
  unsigned long long count() const { return count_; }

 private:
  unsigned long long count_;
};

}  // namespace hybeam

#endif  // HYBEAM_ERRORS_HPP
