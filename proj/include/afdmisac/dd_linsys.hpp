// dd_linsys.hpp - DD-domain linear system: 2D DFT, circular convolution, noisy transmission.
//
// Conventions: dft2 is unnormalized, idft2 carries 1/(MN). With this choice the
// per-bin model Y_f = H_f X_f + W_f sees noise variance MN * sigma_w^2 per bin.

#pragma once

#include <cstdint>
#include <random>

#include "afdmisac/afdm_kernel.hpp"
#include "afdmisac/common.hpp"

namespace afdmisac {

using Rng = std::mt19937_64;

/// DD symbol frame; rows are delay bins, columns Doppler bins.
using Frame = CMatrix;

CMatrix dft2(const CMatrix& a);
CMatrix idft2(const CMatrix& a);

/// C[l,n] = sum_{a,b} A[a,b] B[(l-a) mod M, (n-b) mod N], evaluated through dft2.
CMatrix circ_conv2(const CMatrix& a, const CMatrix& b);

/// Adds i.i.d. circularly-symmetric complex Gaussian noise of variance sigma2 per entry.
void add_awgn(CMatrix& y, double sigma2, Rng& rng);

/// Y = (H * G * X) + W. `precoder` may be null (identity).
Frame transmit(const Frame& x, const DDKernel& channel, const DDKernel* precoder, double sigma_w2,
               Rng& rng);

/// Effective kernel H * G.
DDKernel effective_channel(const DDKernel& channel, const DDKernel& precoder);

/// Independent stream for Monte-Carlo frame `index` under `base_seed`.
inline Rng frame_rng(std::uint64_t base_seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

}  // namespace afdmisac
