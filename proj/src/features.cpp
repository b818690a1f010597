#include "afdmisac/features.hpp"

#include <algorithm>

namespace afdmisac {

namespace {

void mean_std(const std::vector<double>& v, double& mu, double& sd) {
    mu = 0.0;
    for (double x : v) mu += x;
    mu /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    sd = std::sqrt(ss / static_cast<double>(v.size()));
    // constant feature: keep it centered and scale by its own magnitude, so a
    // delay in seconds is not divided by one second
    if (!(sd > 1e-12 * std::abs(mu)) || sd == 0.0) sd = mu != 0.0 ? std::abs(mu) : 1.0;
}

}  // namespace

Normalizer::Normalizer(int K, double a_min)
    : K(K), a_min(a_min), mu_a(K, 0.0), sd_a(K, 1.0), mu_tau(K, 0.0), sd_tau(K, 1.0), mu_nu(K, 0.0),
      sd_nu(K, 1.0) {
    if (K < 1) throw ValidationError("K", "need at least one slot");
    if (!(a_min > 0.0)) throw ValidationError("A_min", "must be positive");
}

Normalizer Normalizer::fit(std::span<const SlotFrame> frames, int K, double a_min) {
    if (frames.empty()) throw ValidationError("frames", "cannot fit normalizer on an empty split");
    Normalizer n(K, a_min);
    std::vector<double> a, tau, nu;
    a.reserve(frames.size());
    tau.reserve(frames.size());
    nu.reserve(frames.size());
    for (int k = 0; k < K; ++k) {
        a.clear();
        tau.clear();
        nu.clear();
        for (const auto& f : frames) {
            if (static_cast<int>(f.size()) != K) throw ValidationError("frames", "slot count differs from K");
            a.push_back(std::log(std::max(f[k].amp, a_min)));
            tau.push_back(f[k].delay_s);
            nu.push_back(f[k].doppler_hz);
        }
        mean_std(a, n.mu_a[k], n.sd_a[k]);
        mean_std(tau, n.mu_tau[k], n.sd_tau[k]);
        mean_std(nu, n.mu_nu[k], n.sd_nu[k]);
    }
    return n;
}

RVector Normalizer::encode(const SlotFrame& f) const {
    if (static_cast<int>(f.size()) != K) throw ValidationError("frame", "slot count differs from K");
    const auto L = layout();
    RVector x(L.size());
    for (int k = 0; k < K; ++k) {
        x[L.a(k)] = (std::log(std::max(f[k].amp, a_min)) - mu_a[k]) / sd_a[k];
        x[L.s(k)] = std::sin(f[k].phase);
        x[L.c(k)] = std::cos(f[k].phase);
        x[L.tau(k)] = (f[k].delay_s - mu_tau[k]) / sd_tau[k];
        x[L.nu(k)] = (f[k].doppler_hz - mu_nu[k]) / sd_nu[k];
    }
    return x;
}

std::vector<PredictedPath> Normalizer::decode(const RVector& x) const {
    const auto L = layout();
    if (x.size() != L.size()) throw ValidationError("features", "expected length 5K");
    std::vector<PredictedPath> out(K);
    for (int k = 0; k < K; ++k) {
        auto& p = out[k];
        p.amp = std::exp(log_amp(k, x[L.a(k)]));
        // atan2(0, 0) == 0 covers the degenerate (s, c) = (0, 0) case
        p.phase = std::atan2(x[L.s(k)], x[L.c(k)]);
        p.delay_s = x[L.tau(k)] * sd_tau[k] + mu_tau[k];
        p.doppler_hz = x[L.nu(k)] * sd_nu[k] + mu_nu[k];
        p.gain = std::polar(p.amp, p.phase);
    }
    return out;
}

std::vector<KernelPath> to_kernel_paths(std::span<const PredictedPath> p) {
    std::vector<KernelPath> out;
    out.reserve(p.size());
    for (const auto& q : p) out.push_back(KernelPath{q.gain, q.delay_s, q.doppler_hz});
    return out;
}

}  // namespace afdmisac
