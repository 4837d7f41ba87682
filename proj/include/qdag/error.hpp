#ifndef QDAG_ERROR_HPP
#define QDAG_ERROR_HPP

#include <stdexcept>
#include <string>

namespace qdag {

// Input or validation failure. Messages start with a stable slug
// ("duplicate-parent: ...") so callers and tests can dispatch on the kind.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qdag

#endif
