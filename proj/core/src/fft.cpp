#include "qnls/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace qnls::fft {
namespace {

// FFTW planning is not thread-safe and FFTW_MEASURE is not reproducible, so
// plans are created once per (size, direction) with FFTW_ESTIMATE under a lock
// and then executed through the thread-safe new-array interface.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int n, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<cplx> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    fftw_plan p = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(a.data()),
                                   reinterpret_cast<fftw_complex*>(b.data()), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

void execute(std::span<const cplx> in, std::span<cplx> out, int sign) {
  const int n = static_cast<int>(in.size());
  fftw_plan plan = PlanCache::instance().get(n, sign);
  // FFTW does not write to the input of an out-of-place c2c transform.
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace

void forward(std::span<const cplx> in, std::span<cplx> out) {
  if (in.data() == out.data()) {
    std::vector<cplx> tmp(in.begin(), in.end());
    execute(tmp, out, FFTW_FORWARD);
  } else {
    execute(in, out, FFTW_FORWARD);
  }
}

void inverse(std::span<const cplx> in, std::span<cplx> out) {
  if (in.data() == out.data()) {
    std::vector<cplx> tmp(in.begin(), in.end());
    execute(tmp, out, FFTW_BACKWARD);
  } else {
    execute(in, out, FFTW_BACKWARD);
  }
  const double scale = 1.0 / static_cast<double>(out.size());
  for (auto& v : out) v *= scale;
}

std::vector<cplx> forward(std::span<const cplx> in) {
  std::vector<cplx> out(in.size());
  forward(in, out);
  return out;
}

std::vector<cplx> inverse(std::span<const cplx> in) {
  std::vector<cplx> out(in.size());
  inverse(in, out);
  return out;
}

}  // namespace qnls::fft
