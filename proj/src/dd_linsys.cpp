#include "afdmisac/dd_linsys.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace afdmisac {

namespace {

// FFTW planning is not thread-safe, execution with new-array is. Plans are
// cached per (M, N, sign) for the lifetime of the process.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(int m, int n, int sign) {
        std::lock_guard lock(mu_);
        const auto key = std::make_tuple(m, n, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        auto* in = fftw_alloc_complex(static_cast<size_t>(m) * n);
        auto* out = fftw_alloc_complex(static_cast<size_t>(m) * n);
        fftw_plan p = fftw_plan_dft_2d(m, n, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(in);
        fftw_free(out);
        if (!p) throw Error("fftw: failed to plan " + std::to_string(m) + "x" + std::to_string(n));
        plans_.emplace(key, p);
        return p;
    }

    ~PlanCache() {
        for (auto& [k, p] : plans_) fftw_destroy_plan(p);
    }

private:
    std::mutex mu_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

CMatrix run_fft(const CMatrix& a, int sign) {
    CMatrix in = a;  // FFTW may not preserve input for every plan type
    CMatrix out(a.rows(), a.cols());
    fftw_plan p = PlanCache::instance().get(static_cast<int>(a.rows()), static_cast<int>(a.cols()), sign);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

}  // namespace

CMatrix dft2(const CMatrix& a) { return run_fft(a, FFTW_FORWARD); }

CMatrix idft2(const CMatrix& a) {
    CMatrix out = run_fft(a, FFTW_BACKWARD);
    out /= static_cast<double>(a.size());
    return out;
}

CMatrix circ_conv2(const CMatrix& a, const CMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ValidationError("circ_conv2", "shape mismatch " + std::to_string(a.rows()) + "x" +
                                                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                                                "x" + std::to_string(b.cols()));
    CMatrix fa = dft2(a);
    fa.array() *= dft2(b).array();
    return idft2(fa);
}

void add_awgn(CMatrix& y, double sigma2, Rng& rng) {
    if (sigma2 <= 0.0) return;
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5 * sigma2));
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double re = nd(rng);
        const double im = nd(rng);
        y.data()[i] += cd(re, im);
    }
}

Frame transmit(const Frame& x, const DDKernel& channel, const DDKernel* precoder, double sigma_w2, Rng& rng) {
    if (sigma_w2 < 0.0) throw ValidationError("sigma_w2", "must be non-negative");
    CMatrix f = dft2(x);
    f.array() *= dft2(channel.values).array();
    if (precoder) f.array() *= dft2(precoder->values).array();
    Frame y = idft2(f);
    add_awgn(y, sigma_w2, rng);
    return y;
}

DDKernel effective_channel(const DDKernel& channel, const DDKernel& precoder) {
    return DDKernel(channel.grid, circ_conv2(channel.values, precoder.values));
}

}  // namespace afdmisac
