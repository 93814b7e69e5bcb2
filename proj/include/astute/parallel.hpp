#pragma once

namespace astute {

// Worker count for the OpenMP kernels. 0 means "library default": the
// ASTUTE_JOBS environment variable if set, otherwise the OpenMP runtime
// default. Serial reference implementations ignore this entirely.
int max_jobs();
void set_max_jobs(int jobs);

}  // namespace astute
