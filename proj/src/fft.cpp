#include "regiontag/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

#include "regiontag/error.hpp"

namespace regiontag {

namespace {

struct PlanPair {
    fftw_plan forward;
    fftw_plan inverse;
};

// The FFTW planner is not thread-safe; execution with the new-array interface is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

PlanPair plans_for(int n) {
    static std::map<int, PlanPair> cache;
    std::lock_guard lock(planner_mutex());
    if (auto it = cache.find(n); it != cache.end()) return it->second;
    std::vector<double> real(static_cast<std::size_t>(n));
    std::vector<fftw_complex> cplx(static_cast<std::size_t>(n / 2 + 1));
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair p{fftw_plan_dft_r2c_1d(n, real.data(), cplx.data(), flags),
               fftw_plan_dft_c2r_1d(n, cplx.data(), real.data(), flags)};
    if (p.forward == nullptr || p.inverse == nullptr) internal_error("FFTW planning failed");
    cache.emplace(n, p);
    return p;
}

}  // namespace

RealFft::RealFft(int n) : n_(n) {
    if (n <= 0) usage_error("FFT length must be positive");
    const PlanPair p = plans_for(n);
    forward_plan_ = p.forward;
    inverse_plan_ = p.inverse;
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
    if (in.size() != static_cast<std::size_t>(n_) || out.size() != static_cast<std::size_t>(bins())) {
        internal_error("RealFft::forward: size mismatch");
    }
    // r2c does not modify its input
    fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), const_cast<double*>(in.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
    if (in.size() != static_cast<std::size_t>(bins()) || out.size() != static_cast<std::size_t>(n_)) {
        internal_error("RealFft::inverse: size mismatch");
    }
    std::vector<std::complex<double>> scratch(in.begin(), in.end());  // c2r clobbers its input
    fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_),
                         reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
}

}  // namespace regiontag
