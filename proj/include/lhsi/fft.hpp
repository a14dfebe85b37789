#pragma once

// Thin FFTW wrapper: process-wide plan cache, in-place complex 2D transforms.

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace lhsi::fft {

// Smallest m >= n whose prime factors are all in {2, 3, 5}.
inline int next_fast_size(int n) {
  if (n <= 1) return 1;
  for (int m = n;; ++m) {
    int r = m;
    for (int f : {2, 3, 5})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}

namespace detail {

// Plans are created once per (ny, nx, sign) and reused for the life of the
// process. FFTW_UNALIGNED lets the plan execute on any caller buffer via the
// new-array interface; plan creation is serialized (FFTW planning is not
// thread safe), execution is.
class PlanCache {
 public:
  static fftw_plan get(int ny, int nx, int sign) {
    static PlanCache cache;
    std::lock_guard<std::mutex> lock(cache.mutex_);
    auto key = std::tuple{ny, nx, sign};
    auto it = cache.plans_.find(key);
    if (it != cache.plans_.end()) return it->second;
    std::vector<std::complex<double>> scratch(static_cast<size_t>(ny) * nx);
    fftw_plan plan = fftw_plan_dft_2d(
        ny, nx, reinterpret_cast<fftw_complex*>(scratch.data()),
        reinterpret_cast<fftw_complex*>(scratch.data()), sign,
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw std::runtime_error("fftw plan creation failed");
    cache.plans_.emplace(key, plan);
    return plan;
  }

 private:
  PlanCache() = default;
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

}  // namespace detail

// In-place unnormalized 2D DFT of a row-major ny x nx complex buffer.
inline void transform2d(std::complex<double>* data, int ny, int nx, int sign) {
  fftw_plan plan = detail::PlanCache::get(ny, nx, sign);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(data),
                   reinterpret_cast<fftw_complex*>(data));
}

inline void forward2d(std::vector<std::complex<double>>& buf, int ny, int nx) {
  transform2d(buf.data(), ny, nx, FFTW_FORWARD);
}

inline void inverse2d(std::vector<std::complex<double>>& buf, int ny, int nx) {
  transform2d(buf.data(), ny, nx, FFTW_BACKWARD);
}

}  // namespace lhsi::fft
