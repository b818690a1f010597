// gradcheck.hpp - central finite differences of composite_loss o gru_forward.

#pragma once

#include <random>
#include <string>
#include <vector>

#include "afdmisac/loss.hpp"

namespace gradcheck {

using namespace afdmisac;

struct Problem {
    GruModel model;
    std::vector<Mat> inputs;  // L x (5K x B)
    Mat target;               // H*5K x B
    Mat amps;                 // H*K x B
    Normalizer norm;
    LossWeights lw;
};

inline Problem random_problem(std::mt19937_64& rng, int d, int K, int L, int layers, int H, int B, bool residual) {
    GruConfig cfg;
    cfg.input_dim = 5 * K;
    cfg.hidden = d;
    cfg.layers = layers;
    cfg.proj = std::max(1, d / 2 + 1);
    cfg.horizon = H;
    cfg.window = L;
    cfg.residual = residual;
    Problem p{GruModel(cfg), {}, {}, {}, Normalizer(K, 1e-4), {}};
    Rng init(rng());
    p.model.init_uniform(init);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.05, 1.0), ph(-kPi, kPi);
    for (int k = 0; k < K; ++k) {
        p.norm.mu_a[k] = -1.0 + 0.2 * g(rng);
        p.norm.sd_a[k] = u(rng);
        p.norm.mu_tau[k] = g(rng);
        p.norm.sd_tau[k] = u(rng);
        p.norm.mu_nu[k] = g(rng);
        p.norm.sd_nu[k] = u(rng);
    }
    for (int t = 0; t < L; ++t) {
        Mat x(5 * K, B);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
        p.inputs.push_back(x);
    }
    const FeatureLayout lay{K};
    p.target.resize(H * 5 * K, B);
    p.amps.resize(H * K, B);
    for (int b = 0; b < B; ++b)
        for (int h = 0; h < H; ++h)
            for (int k = 0; k < K; ++k) {
                const int o = h * 5 * K;
                const double a = u(rng), th = ph(rng);
                p.amps(h * K + k, b) = a;
                p.target(o + lay.a(k), b) = (std::log(a) - p.norm.mu_a[k]) / p.norm.sd_a[k];
                p.target(o + lay.s(k), b) = std::sin(th);
                p.target(o + lay.c(k), b) = std::cos(th);
                // spread across both Huber branches
                p.target(o + lay.tau(k), b) = 2.0 * g(rng);
                p.target(o + lay.nu(k), b) = 2.0 * g(rng);
            }
    p.lw = {1.0, 0.7, 1.3, 0.9, 0.1, 0.5};
    return p;
}

inline double loss_at(const Problem& p) {
    const Mat y = p.model.forward(p.inputs);
    return composite_loss(y, p.target, p.amps, p.lw, p.norm, false).total;
}

struct TensorError {
    std::string name;
    double rel = 0.0;
};

/// Per-tensor ||g_analytic - g_fd|| / max(||g_analytic||, ||g_fd||, tiny).
inline std::vector<TensorError> check(Problem& p, double step = 1e-5) {
    GruCache cache;
    const Mat y = p.model.forward(p.inputs, &cache);
    const LossResult lr = composite_loss(y, p.target, p.amps, p.lw, p.norm, true);
    std::vector<double> grad(p.model.params().size(), 0.0);
    p.model.backward(cache, lr.grad, grad);

    std::vector<TensorError> out;
    auto& w = p.model.params();
    for (const auto& spec : p.model.tensors()) {
        double num = 0.0, da = 0.0, df = 0.0;
        for (std::size_t i = spec.offset; i < spec.offset + spec.size(); ++i) {
            const double keep = w[i];
            w[i] = keep + step;
            const double lp = loss_at(p);
            w[i] = keep - step;
            const double lm = loss_at(p);
            w[i] = keep;
            const double fd = (lp - lm) / (2.0 * step);
            num += (grad[i] - fd) * (grad[i] - fd);
            da += grad[i] * grad[i];
            df += fd * fd;
        }
        const double den = std::max({std::sqrt(da), std::sqrt(df), 1e-12});
        out.push_back({spec.name, std::sqrt(num) / den});
    }
    return out;
}

}  // namespace gradcheck
