#include "astute/parallel.hpp"

#include <cstdlib>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace astute {

namespace {
int g_jobs = 0;

int env_jobs() {
    if (const char* s = std::getenv("ASTUTE_JOBS")) {
        const int n = std::atoi(s);
        if (n > 0) return n;
    }
    return 0;
}
}  // namespace

int max_jobs() {
    if (g_jobs > 0) return g_jobs;
    if (const int n = env_jobs(); n > 0) return n;
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_max_jobs(int jobs) { g_jobs = jobs > 0 ? jobs : 0; }

}  // namespace astute
