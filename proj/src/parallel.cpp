#include "levylse/parallel.hpp"

#include <cstdlib>
#include <string>

#include "levylse/errors.hpp"

namespace levylse {

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  const char* env = std::getenv("LEVY_LSE_THREADS");
  if (!env || !*env) return 1;
  std::size_t used = 0;
  long long value = 0;
  try {
    value = std::stoll(env, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != std::string(env).size() || value < 1) {
    throw ValidationError(std::string("LEVY_LSE_THREADS must be a positive integer, got '") + env + "'");
  }
  return static_cast<std::size_t>(value);
}

}  // namespace levylse
