// SPDX-License-Identifier: Apache-2.0
#include "freeinit/runtime.hpp"

#include <cstdlib>
#include <algorithm>
#include <exception>
#include <string>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace freeinit {

void tune_allocator()
{
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

int worker_threads()
{
    const char* env = std::getenv("FREEINIT_THREADS");
    if (env == nullptr)
        return 1;
    try {
        return std::max(1, std::stoi(env));
    } catch (const std::exception&) {
        return 1;
    }
}

} // namespace freeinit
