// preequalizer.hpp - per-bin MMSE and CRLB-regularized ISAC pre-equalizers.
//
//   MMSE:  G_f = H_f* / (|H_f|^2 + gamma)
//   ISAC:  G_f = H_f* / max(|H_f|^2 (1 - lambda S) + gamma, floor)
//
// Both are taken to the DD domain with idft2 and rescaled to frame power Es
// (alpha). The evaluation-side effective kernel H (*) G is then scaled to unit
// mean-square unless the noNorm ablation is active.

#pragma once

#include "afdmisac/afdm_kernel.hpp"
#include "afdmisac/fisher_crlb.hpp"

namespace afdmisac {

struct PreeqConfig {
    double lambda_isac = 0.0;
    double gamma = 1.0;         // sigma_w^2 / Es
    double denom_floor = -1.0;  // <= 0 selects gamma
    bool normalize_heff = true;

    void validate() const;
    double floor() const { return denom_floor > 0.0 ? denom_floor : gamma; }
    static PreeqConfig from_power(const PowerConfig& pc, double lambda = 0.0);
};

CMatrix mmse_filter(const CMatrix& H_f, double gamma);
CMatrix isac_filter(const CMatrix& H_f, const RMatrix& S, const PreeqConfig& cfg);

/// Scales G by a positive real alpha so that (1/MN) sum |G|^2 = Es.
DDKernel normalize_precoder(const DDKernel& G, double Es, double* alpha = nullptr);

struct ScaledKernel {
    DDKernel kernel;
    double scale = 1.0;  // applied factor
};

/// Scales H_eff to unit mean-square.
ScaledKernel normalize_effective(const DDKernel& H_eff);

struct Preequalizer {
    DDKernel G;      // power-normalized DD precoder
    CMatrix G_f;     // unscaled frequency-domain filter
    double alpha = 1.0;
};

/// `S` may be null (MMSE). The CSI kernel must come from prediction or from an
/// earlier frame; ground truth at the current frame is evaluation-only.
Preequalizer build_preequalizer(const DDKernel& H_csi, const SensitivityMap* S, const PreeqConfig& cfg,
                                const PowerConfig& pc);

/// H_true (*) G, unit mean-square when cfg.normalize_heff.
ScaledKernel evaluation_channel(const DDKernel& H_true, const DDKernel& G, const PreeqConfig& cfg);

}  // namespace afdmisac
