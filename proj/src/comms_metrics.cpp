#include "afdmisac/comms_metrics.hpp"

#include <algorithm>
#include <limits>

namespace afdmisac {

namespace {

// Gray pair -> amplitude level for one 16QAM axis.
double qam_level(int two_bits) {
    static constexpr double lv[4] = {-3.0, -1.0, 3.0, 1.0};  // 00, 01, 10, 11
    return lv[two_bits & 3];
}

}  // namespace

Constellation Constellation::make(Modulation kind, double Es) {
    if (!(Es > 0.0)) throw ValidationError("Es", "must be positive");
    Constellation c;
    c.kind = kind;
    c.Es = Es;
    if (kind == Modulation::qpsk) {
        const double a = std::sqrt(Es / 2.0);
        for (int i = 0; i < 4; ++i) {
            const int b0 = (i >> 1) & 1, b1 = i & 1;
            c.points.emplace_back((1 - 2 * b0) * a, (1 - 2 * b1) * a);
        }
    } else {
        const double a = std::sqrt(Es / 10.0);
        for (int i = 0; i < 16; ++i) c.points.emplace_back(qam_level(i >> 2) * a, qam_level(i) * a);
    }
    return c;
}

int Constellation::nearest(cd y) const {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int i = 0; i < order(); ++i) {
        const double d = std::norm(y - points[i]);
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return best;
}

Frame modulate(std::span<const std::uint8_t> bits, const Constellation& c, const DDGrid& grid) {
    const int m = c.bits_per_symbol();
    if (bits.size() != static_cast<std::size_t>(grid.size()) * m)
        throw ValidationError("bits", "expected " + std::to_string(grid.size() * m) + " bits");
    std::vector<int> idx(grid.size());
    for (int s = 0; s < grid.size(); ++s) {
        int v = 0;
        for (int b = 0; b < m; ++b) {
            if (bits[s * m + b] > 1) throw ValidationError("bits", "values must be 0 or 1");
            v = (v << 1) | bits[s * m + b];
        }
        idx[s] = v;
    }
    return symbols_to_frame(idx, c, grid);
}

Frame symbols_to_frame(std::span<const int> idx, const Constellation& c, const DDGrid& grid) {
    if (idx.size() != static_cast<std::size_t>(grid.size())) throw ValidationError("symbols", "expected MN symbols");
    Frame x(grid.M, grid.N);
    for (int s = 0; s < grid.size(); ++s) {
        if (idx[s] < 0 || idx[s] >= c.order()) throw ValidationError("symbols", "index out of range");
        x.data()[s] = c.points[idx[s]];
    }
    return x;
}

std::vector<int> demodulate(const Frame& Y, const Constellation& c) {
    std::vector<int> out(Y.size());
    for (Eigen::Index i = 0; i < Y.size(); ++i) out[i] = c.nearest(Y.data()[i]);
    return out;
}

std::vector<int> random_symbols(const Constellation& c, int count, Rng& rng) {
    std::uniform_int_distribution<int> u(0, c.order() - 1);
    std::vector<int> out(count);
    for (auto& v : out) v = u(rng);
    return out;
}

Receiver lmmse_receiver(const DDKernel& H_eff, double Es, double noise_var) {
    if (!(Es > 0.0)) throw ValidationError("Es", "must be positive");
    if (!(noise_var >= 0.0)) throw ValidationError("noise_var", "must be non-negative");
    Receiver rx;
    rx.h0 = H_eff.values(0, 0);
    rx.noise_var = noise_var;
    const double den = Es * H_eff.values.squaredNorm() + noise_var;
    if (!(den > 0.0)) throw ValidationError("H_eff", "no signal and no noise");
    rx.beta = std::conj(rx.h0) * Es / den;
    return rx;
}

Frame soft_estimate(const Frame& Y, const Receiver& rx) { return Y * rx.beta; }

std::vector<int> detect(const Frame& Y, const Receiver& rx, const Constellation& c) {
    if (rx.h0 == cd{}) throw ValidationError("h0", "main tap is zero");
    return demodulate(Y / rx.h0, c);
}

double frame_mse(const Frame& X_soft, const Frame& X) {
    if (X_soft.rows() != X.rows() || X_soft.cols() != X.cols()) throw ValidationError("X_soft", "shape mismatch");
    return (X_soft - X).squaredNorm() / static_cast<double>(X.size());
}

double frame_ser(std::span<const int> detected, std::span<const int> sent) {
    if (detected.size() != sent.size() || sent.empty()) throw ValidationError("detected", "length mismatch");
    std::size_t err = 0;
    for (std::size_t i = 0; i < sent.size(); ++i) err += detected[i] != sent[i];
    return static_cast<double>(err) / static_cast<double>(sent.size());
}

double cnmse(const DDKernel& H_true, const DDKernel& H_hat) {
    if (!(H_true.grid == H_hat.grid)) throw ValidationError("H_hat", "grid differs from H_true");
    const double e = H_true.values.squaredNorm();
    if (!(e > 0.0)) throw ValidationError("H_true", "zero-energy kernel");
    return 100.0 * (H_true.values - H_hat.values).squaredNorm() / e;
}

double percentile(std::vector<double> v, double q) {
    if (v.empty()) throw ValidationError("values", "empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Summary summarize(std::span<const double> v) {
    Summary s;
    s.count = v.size();
    if (v.empty()) return s;
    std::vector<double> c(v.begin(), v.end());
    for (double x : c) s.mean += x;
    s.mean /= static_cast<double>(c.size());
    s.p50 = percentile(c, 0.5);
    s.p90 = percentile(std::move(c), 0.9);
    return s;
}

double smape_amp(std::span<const double> a_true, std::span<const double> a_pred) {
    if (a_true.size() != a_pred.size()) throw ValidationError("a_pred", "length mismatch");
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < a_true.size(); ++i) {
        const double s = a_true[i] + a_pred[i];
        if (s == 0.0) continue;
        acc += 2.0 * std::abs(a_pred[i] - a_true[i]) / s;
        ++n;
    }
    if (n == 0) throw ValidationError("slots", "no matched slots");
    return 100.0 * acc / static_cast<double>(n);
}

double mae_phase(std::span<const double> th_true, std::span<const double> th_pred, std::span<const double> weights) {
    if (th_true.size() != th_pred.size()) throw ValidationError("th_pred", "length mismatch");
    if (!weights.empty() && weights.size() != th_true.size()) throw ValidationError("weights", "length mismatch");
    double acc = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < th_true.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        if (!(w >= 0.0)) throw ValidationError("weights", "must be non-negative");
        acc += w * std::abs(wrap_phase(th_pred[i] - th_true[i]));
        wsum += w;
    }
    if (!(wsum > 0.0)) throw ValidationError("slots", "no matched slots");
    return acc / wsum * 180.0 / kPi;
}

double crlb_ratio(double j_lambda, double j_zero) {
    if (!(j_zero > 0.0)) throw ValidationError("j_zero", "must be positive");
    return j_lambda / j_zero;
}

}  // namespace afdmisac
