#include "rwsmc/parallel.hpp"

#include <cstdlib>
#include <string>

namespace rwsmc {

int default_thread_count() {
  if (const char* s = std::getenv("RWSMC_THREADS")) {
    try {
      int n = std::stoi(s);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  unsigned h = std::thread::hardware_concurrency();
  return h == 0 ? 1 : static_cast<int>(h);
}

}  // namespace rwsmc
