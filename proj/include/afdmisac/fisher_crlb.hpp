// fisher_crlb.hpp - Slepian-Bangs Fisher information, CRLB-trace sensing cost
// and the per-bin sensitivity map that drives the ISAC pre-equalizer.
//
// The noise-free mean is mu(eta; G) = vec(H_f(eta) o G_f o X_f) with H_f the
// unnormalized 2D DFT of the synthesized kernel, vectorized row-major. For a
// complex Gaussian observation with variance sigma^2 per entry,
//   I = (2 / sigma^2) Re{J^H J},   J_sense = tr(I^-1).

#pragma once

#include <span>
#include <string>
#include <vector>

#include "afdmisac/afdm_kernel.hpp"

namespace afdmisac {

/// Real parameters (Re h, Im h, tau, nu) per dominant path, strongest first.
struct EtaVector {
    RVector values;

    int num_paths() const { return static_cast<int>(values.size() / 4); }
    std::vector<KernelPath> paths() const;
    void validate() const;

    /// Up to `k_prime` strongest paths with |h| >= rel_floor * max|h|.
    static EtaVector from_paths(std::span<const KernelPath> paths, int k_prime = 3, double rel_floor = 0.0);
    /// Human-readable parameter name, e.g. "tau2".
    static std::string param_name(int p);
};

struct JacobianSteps {
    double gain = 1e-6;      // absolute, on Re h / Im h
    double tau_frac = 1e-4;  // fraction of delta_tau
    double nu_frac = 1e-4;   // fraction of delta_nu
};

CVector mean_response(const EtaVector& eta, const CMatrix& G_f, const CMatrix& X_f, const DDGrid& grid);

/// Central-difference Jacobian d mu / d eta, MN x P.
CMatrix jacobian_fd(const EtaVector& eta, const CMatrix& G_f, const CMatrix& X_f, const DDGrid& grid,
                    const JacobianSteps& steps = {});

/// Jacobian of vec(H_f) alone. mu is linear in G_f o X_f bin by bin, so
/// jacobian_fd(eta, G, X) == scale_rows(channel_jacobian(eta), G, X).
CMatrix channel_jacobian(const EtaVector& eta, const DDGrid& grid, const JacobianSteps& steps = {});
CMatrix scale_rows(const CMatrix& J_H, const CMatrix& G_f, const CMatrix& X_f);

struct FimResult {
    CMatrix jacobian;
    RMatrix fim;
    RMatrix crlb;
    double trace = 0.0;
    bool jittered = false;
};

/// Conditioning is judged on the unit-diagonal D^-1 I D^-1 (D = sqrt diag I): when its
/// condition number exceeds 1e12, jitter 1e-10 tr/P is added there. Throws Error
/// ("unidentifiable parameterization ...") when no finite inverse exists.
FimResult fim(const CMatrix& J, double sigma_w2);

double sensing_cost(const EtaVector& eta, const CMatrix& G_f, const CMatrix& X_f, double sigma_w2,
                    const DDGrid& grid, const JacobianSteps& steps = {});

struct SensitivityMap {
    DDGrid grid;
    RMatrix values;  // M x N in [0, 1]
    RMatrix q;       // post-equalization power |H_f G_f|^2
};

/// First-order map around the MMSE point:
///   S~[m,n] = (2/sigma^2) Re{j_mn C^2 j_mn^H} / max(q[m,n], 1e-12 max q)
/// clipped at 0 and scaled to max 1.
SensitivityMap sensitivity_fast(const EtaVector& eta, const CMatrix& G_f_mmse, const CMatrix& X_f,
                                double sigma_w2, const DDGrid& grid, const JacobianSteps& steps = {});

/// Same, from a precomputed channel Jacobian (vec(H_f) derivatives) and H_f.
SensitivityMap sensitivity_from_jacobian(const CMatrix& J_H, const CMatrix& H_f, const CMatrix& G_f_mmse,
                                         const CMatrix& X_f, double sigma_w2, const DDGrid& grid);

/// Brute force: per bin, scale the filter so q -> (1 +- eps) q, rebuild the
/// full FIM and difference tr(C). O(MN) full Jacobian and FIM evaluations.
SensitivityMap sensitivity_oracle(const EtaVector& eta, const CMatrix& G_f_mmse, const CMatrix& X_f,
                                  double sigma_w2, const DDGrid& grid, double eps = 1e-3,
                                  const JacobianSteps& steps = {});

/// Clips negatives to zero and scales so the maximum is 1 (all-zero stays zero).
RMatrix normalize_map(RMatrix raw);

}  // namespace afdmisac
