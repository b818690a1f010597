#include "afdmisac/loss.hpp"

namespace afdmisac {

void LossWeights::validate() const {
    const double w[] = {w_A, w_theta, w_tau, w_nu, w_uc, w_c};
    bool any = false;
    for (double v : w) {
        if (!(v >= 0.0)) throw ValidationError("loss_weights", "weights must be non-negative");
        any = any || v > 0.0;
    }
    if (!any) throw ValidationError("loss_weights", "at least one weight must be positive");
}

namespace {

double huber(double x, double& dx) {
    const double ax = std::abs(x);
    if (ax <= kHuberDelta) {
        dx = x;
        return 0.5 * x * x;
    }
    dx = x > 0 ? kHuberDelta : -kHuberDelta;
    return kHuberDelta * (ax - 0.5 * kHuberDelta);
}

}  // namespace

LossResult composite_loss(const Mat& pred, const Mat& target, const Mat& target_amps, const LossWeights& lw,
                          const Normalizer& norm, bool want_grad) {
    const FeatureLayout L = norm.layout();
    const int K = L.K;
    const int F = L.size();
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw ValidationError("pred", "prediction and target shapes differ");
    if (pred.rows() % F != 0) throw ValidationError("pred", "rows must be a multiple of 5K");
    const int H = static_cast<int>(pred.rows() / F);
    const Eigen::Index B = pred.cols();
    if (target_amps.rows() != H * K || target_amps.cols() != B)
        throw ValidationError("target_amps", "expected H*K x B amplitudes");

    const double n_slots = static_cast<double>(H) * K * B;
    double amp_mean = target_amps.sum() / n_slots;
    const bool uniform = !(amp_mean > 0.0);

    double energy = 0.0;
    for (Eigen::Index i = 0; i < target_amps.size(); ++i) energy += target_amps.data()[i] * target_amps.data()[i];
    const double cnmse_den = energy > 0.0 ? energy : n_slots;

    LossResult res;
    if (want_grad) res.grad = Mat::Zero(pred.rows(), pred.cols());
    auto& t = res.terms;
    for (Eigen::Index b = 0; b < B; ++b) {
        for (int h = 0; h < H; ++h) {
            const int o = h * F;
            for (int k = 0; k < K; ++k) {
                const double amp = target_amps(h * K + k, b);
                const double w = uniform ? 1.0 : amp / amp_mean;

                const double da = pred(o + L.a(k), b) - target(o + L.a(k), b);
                const double s_hat = pred(o + L.s(k), b), c_hat = pred(o + L.c(k), b);
                const double ds = s_hat - target(o + L.s(k), b);
                const double dc = c_hat - target(o + L.c(k), b);
                double g_tau = 0.0, g_nu = 0.0;
                const double ht = huber(pred(o + L.tau(k), b) - target(o + L.tau(k), b), g_tau);
                const double hn = huber(pred(o + L.nu(k), b) - target(o + L.nu(k), b), g_nu);
                const double uc = s_hat * s_hat + c_hat * c_hat - 1.0;

                const double log_a = norm.log_amp(k, pred(o + L.a(k), b));
                const double mag = std::exp(log_a);
                const cd h_hat = mag * cd(c_hat, s_hat);
                const cd h_true = amp * cd(target(o + L.c(k), b), target(o + L.s(k), b));
                const cd e = h_hat - h_true;

                t[kLossA] += da * da;
                t[kLossTheta] += w * (ds * ds + dc * dc);
                t[kLossTau] += ht;
                t[kLossNu] += hn;
                t[kLossUc] += uc * uc;
                t[kLossCnmse] += std::norm(e);

                if (!want_grad) continue;
                auto& g = res.grad;
                const double ga = lw.w_A * 2.0 * da / n_slots +
                                  lw.w_c * 2.0 * (std::conj(e) * h_hat).real() * norm.sd_a[k] / cnmse_den;
                const double gs = lw.w_theta * w * ds / n_slots + lw.w_uc * 4.0 * uc * s_hat / n_slots +
                                  lw.w_c * 2.0 * mag * e.imag() / cnmse_den;
                const double gc = lw.w_theta * w * dc / n_slots + lw.w_uc * 4.0 * uc * c_hat / n_slots +
                                  lw.w_c * 2.0 * mag * e.real() / cnmse_den;
                g(o + L.a(k), b) += ga;
                g(o + L.s(k), b) += gs;
                g(o + L.c(k), b) += gc;
                g(o + L.tau(k), b) += lw.w_tau * g_tau / n_slots;
                g(o + L.nu(k), b) += lw.w_nu * g_nu / n_slots;
            }
        }
    }
    t[kLossA] /= n_slots;
    t[kLossTheta] /= 2.0 * n_slots;
    t[kLossTau] /= n_slots;
    t[kLossNu] /= n_slots;
    t[kLossUc] /= n_slots;
    t[kLossCnmse] /= cnmse_den;
    res.total = lw.w_A * t[kLossA] + lw.w_theta * t[kLossTheta] + lw.w_tau * t[kLossTau] + lw.w_nu * t[kLossNu] +
                lw.w_uc * t[kLossUc] + lw.w_c * t[kLossCnmse];
    return res;
}

}  // namespace afdmisac
