// SPDX-License-Identifier: Apache-2.0
#include "fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>

namespace qbt::detail {

namespace {
std::mutex &planner_mutex() {
  static std::mutex mu;
  return mu;
}
}  // namespace

std::vector<cdouble> dft(const std::vector<cdouble> &x, bool forward) {
  const int n = static_cast<int>(x.size());
  std::vector<cdouble> out(x.size());
  if (n == 0) return out;
  auto *in = reinterpret_cast<fftw_complex *>(fftw_malloc(sizeof(fftw_complex) * n));
  auto *res = reinterpret_cast<fftw_complex *>(fftw_malloc(sizeof(fftw_complex) * n));
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(n, in, res, forward ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  std::memcpy(in, x.data(), sizeof(fftw_complex) * n);
  fftw_execute(plan);
  std::memcpy(static_cast<void *>(out.data()), res, sizeof(fftw_complex) * n);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(res);
  return out;
}

}  // namespace qbt::detail
