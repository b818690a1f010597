// loss.hpp - six-term composite training loss for the path predictor.

#pragma once

#include <array>
#include <string_view>

#include "afdmisac/features.hpp"
#include "afdmisac/gru.hpp"

namespace afdmisac {

struct LossWeights {
    double w_A = 1.0;
    double w_theta = 1.0;
    double w_tau = 1.0;
    double w_nu = 1.0;
    double w_uc = 0.1;
    double w_c = 1.0;

    void validate() const;
};

enum LossTerm { kLossA = 0, kLossTheta, kLossTau, kLossNu, kLossUc, kLossCnmse, kNumLossTerms };

inline constexpr std::array<std::string_view, kNumLossTerms> kLossTermNames{"L_A",  "L_theta", "L_tau",
                                                                             "L_nu", "L_uc",    "L_cnmse"};

struct LossResult {
    double total = 0.0;
    std::array<double, kNumLossTerms> terms{};
    Mat grad;  // d(total)/d(pred), same shape as pred
};

inline constexpr double kHuberDelta = 1.0;

/// `pred`, `target`: (H*5K x B) feature blocks. `target_amps`: (H*K x B) tracked linear amplitudes.
/// L_theta weights are the target amplitudes normalized to mean 1 over the batch (uniform if all zero);
/// L_cnmse is sum|h_hat - h|^2 / sum|h|^2 over the batch.
LossResult composite_loss(const Mat& pred, const Mat& target, const Mat& target_amps, const LossWeights& lw,
                          const Normalizer& norm, bool want_grad = true);

}  // namespace afdmisac
