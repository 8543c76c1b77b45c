#pragma once

#include <stdexcept>
#include <string>

namespace pl6 {

// Error taxonomy shared by all modules. The CLI maps these onto exit codes
// (input 2, numerical 3, convergence 4), so throw the most specific one.

struct input_error : std::runtime_error {
  explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct convergence_error : std::runtime_error {
  explicit convergence_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pl6
