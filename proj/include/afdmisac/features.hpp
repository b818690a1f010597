// features.hpp - path-parameter feature encoding for the sequence predictor.
//
// Per frame, K tracked slots become a 5K vector laid out as
//   [a~_1..K, sin(theta)_1..K, cos(theta)_1..K, tau~_1..K, nu~_1..K]
// where a = log(max(A, A_min)) and ~ denotes standardization with
// training-split statistics.

#pragma once

#include <span>
#include <vector>

#include "afdmisac/afdm_kernel.hpp"
#include "afdmisac/path_tracking.hpp"

namespace afdmisac {

struct PredictedPath {
    double amp = 0.0;
    double phase = 0.0;
    double delay_s = 0.0;
    double doppler_hz = 0.0;
    cd gain;
};

/// Index helpers for the 5K layout.
struct FeatureLayout {
    int K;
    int a(int k) const { return k; }
    int s(int k) const { return K + k; }
    int c(int k) const { return 2 * K + k; }
    int tau(int k) const { return 3 * K + k; }
    int nu(int k) const { return 4 * K + k; }
    int size() const { return 5 * K; }
};

struct Normalizer {
    Normalizer() = default;
    Normalizer(int K, double a_min);

    /// Fits per-slot mean/std of {a, tau, nu} on the given frames and freezes them.
    static Normalizer fit(std::span<const SlotFrame> frames, int K, double a_min = 1e-4);

    FeatureLayout layout() const { return FeatureLayout{K}; }

    RVector encode(const SlotFrame& f) const;
    std::vector<PredictedPath> decode(const RVector& x) const;

    /// De-standardized log-amplitude for slot k.
    double log_amp(int k, double a_std) const { return a_std * sd_a[k] + mu_a[k]; }

    int K = 0;
    double a_min = 1e-4;
    std::vector<double> mu_a, sd_a, mu_tau, sd_tau, mu_nu, sd_nu;  // per slot
};

/// Kernel paths from decoded predictions.
std::vector<KernelPath> to_kernel_paths(std::span<const PredictedPath> p);

}  // namespace afdmisac
