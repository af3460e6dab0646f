// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace freeinit {

/// Keeps large allocations on the heap instead of fresh mmap'd pages.
/// Training allocates tens of megabytes per convolution; without this most
/// of the time goes to page faults. No-op outside glibc.
void tune_allocator();

/// Worker count from FREEINIT_THREADS (default 1, clamped to >= 1).
int worker_threads();

} // namespace freeinit
