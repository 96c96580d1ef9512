#include "fkent/errors.hpp"

namespace fkent {

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) {
    return 2;
  }
  if (dynamic_cast<const UsageError*>(&e) != nullptr) {
    return 2;
  }
  if (dynamic_cast<const InvariantViolation*>(&e) != nullptr) {
    return 3;
  }
  if (dynamic_cast<const ResourceError*>(&e) != nullptr) {
    return 4;
  }
  return 1;
}

}  // namespace fkent
