// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "qbt/types.hpp"

namespace qbt::detail {

/// Unnormalised DFT, X_k = sum_j x_j exp(-+ 2 pi i jk/n) for forward/backward.
std::vector<cdouble> dft(const std::vector<cdouble> &x, bool forward);

}  // namespace qbt::detail
