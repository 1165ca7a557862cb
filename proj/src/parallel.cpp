#include "dsprof/parallel.hpp"

#include <cstdlib>
#include <string>

namespace dsprof {

std::size_t default_thread_count() {
  if (const char* env = std::getenv("DSPROF_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

}  // namespace dsprof
