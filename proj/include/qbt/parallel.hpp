// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace qbt {

/// Worker count: QBT_NUM_THREADS if set, else hardware concurrency.
unsigned num_threads();

/// Runs body(i) for i in [0, n), statically chunked. The first exception
/// thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &body);

}  // namespace qbt
