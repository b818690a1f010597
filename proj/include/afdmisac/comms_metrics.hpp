// comms_metrics.hpp - modulation, the per-frame receiver model and evaluation metrics.
//
// Receiver model. After pre-equalization the receiver sees
//   Y = H_eff (*) X + W,   W ~ CN(0, sigma_rx^2)
// and treats the main tap h0 = H_eff[0,0] as the per-bin gain, with every
// other tap acting as interference. The soft estimate is X_soft = beta Y with
// the LMMSE scalar
//   beta = conj(h0) Es / (Es sum|H_eff|^2 + sigma_rx^2)
// and hard decisions are nearest-neighbour on Y / h0.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "afdmisac/afdm_kernel.hpp"
#include "afdmisac/dd_linsys.hpp"

namespace afdmisac {

enum class Modulation { qpsk, qam16 };

/// Gray-coded constellation scaled to mean energy Es. Symbol index i carries
/// bits b_{m-1}..b_0 of i, most significant first.
///   QPSK:  bits (b0 b1) -> ((1 - 2 b0) + j (1 - 2 b1)) sqrt(Es/2); 00 -> (1+j) sqrt(Es/2)
///   16QAM: two Gray pairs per axis, 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3, times sqrt(Es/10)
struct Constellation {
    Modulation kind = Modulation::qpsk;
    double Es = 1.0;
    std::vector<cd> points;

    static Constellation make(Modulation kind, double Es = 1.0);
    int order() const { return static_cast<int>(points.size()); }
    int bits_per_symbol() const { return order() == 4 ? 2 : 4; }
    int nearest(cd y) const;
};

/// Bits (0/1, length MN * bits_per_symbol) to a DD frame, row-major.
Frame modulate(std::span<const std::uint8_t> bits, const Constellation& c, const DDGrid& grid);
std::vector<int> demodulate(const Frame& Y, const Constellation& c);
/// Symbol indices of a frame of known points (exact lookup by nearest neighbour).
Frame symbols_to_frame(std::span<const int> idx, const Constellation& c, const DDGrid& grid);
std::vector<int> random_symbols(const Constellation& c, int count, Rng& rng);

struct Receiver {
    cd h0;
    cd beta;
    double noise_var = 0.0;
};

Receiver lmmse_receiver(const DDKernel& H_eff, double Es, double noise_var);

/// Soft estimate beta * Y.
Frame soft_estimate(const Frame& Y, const Receiver& rx);
/// Hard decisions on Y / h0.
std::vector<int> detect(const Frame& Y, const Receiver& rx, const Constellation& c);

/// mean |X_soft - X|^2
double frame_mse(const Frame& X_soft, const Frame& X);
/// Fraction of symbol errors.
double frame_ser(std::span<const int> detected, std::span<const int> sent);

/// sum |H - H_hat|^2 / sum |H|^2 in percent. Throws on a zero-energy H.
double cnmse(const DDKernel& H_true, const DDKernel& H_hat);

struct Summary {
    double mean = 0.0;
    double p50 = 0.0;
    double p90 = 0.0;
    std::size_t count = 0;
};

/// Mean and linearly interpolated percentiles.
Summary summarize(std::span<const double> v);
double percentile(std::vector<double> v, double q);

/// Mean of 2|A_hat - A| / (A_hat + A) in percent over slots; slots with A = A_hat = 0 skipped.
double smape_amp(std::span<const double> a_true, std::span<const double> a_pred);

/// Mean wrapped |theta_hat - theta| in degrees, weighted by `weights` (true amplitudes) or
/// uniformly when `weights` is empty.
double mae_phase(std::span<const double> th_true, std::span<const double> th_pred,
                 std::span<const double> weights = {});

/// J_sense(lambda) / J_sense(0).
double crlb_ratio(double j_lambda, double j_zero);

}  // namespace afdmisac
