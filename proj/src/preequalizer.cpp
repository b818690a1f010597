#include "afdmisac/preequalizer.hpp"

#include "afdmisac/dd_linsys.hpp"

namespace afdmisac {

void PreeqConfig::validate() const {
    if (!(lambda_isac >= 0.0) || !std::isfinite(lambda_isac))
        throw ValidationError("lambda_isac", "must be a finite non-negative number");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("gamma", "must be positive");
    if (!(floor() > 0.0)) throw ValidationError("denom_floor", "must be positive");
}

PreeqConfig PreeqConfig::from_power(const PowerConfig& pc, double lambda) {
    pc.validate();
    PreeqConfig c;
    c.gamma = pc.gamma();
    c.lambda_isac = lambda;
    return c;
}

CMatrix mmse_filter(const CMatrix& H_f, double gamma) {
    if (!(gamma > 0.0)) throw ValidationError("gamma", "must be positive");
    CMatrix G(H_f.rows(), H_f.cols());
    for (Eigen::Index i = 0; i < H_f.size(); ++i) {
        const cd h = H_f.data()[i];
        G.data()[i] = std::conj(h) / (std::norm(h) + gamma);
    }
    return G;
}

CMatrix isac_filter(const CMatrix& H_f, const RMatrix& S, const PreeqConfig& cfg) {
    cfg.validate();
    if (S.rows() != H_f.rows() || S.cols() != H_f.cols()) throw ValidationError("S", "shape differs from H_f");
    const double fl = cfg.floor();
    CMatrix G(H_f.rows(), H_f.cols());
    for (Eigen::Index i = 0; i < H_f.size(); ++i) {
        const cd h = H_f.data()[i];
        const double s = S.data()[i];
        if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("S", "sensitivity values must lie in [0, 1]");
        const double denom = std::norm(h) * (1.0 - cfg.lambda_isac * s) + cfg.gamma;
        G.data()[i] = std::conj(h) / std::max(denom, fl);
    }
    return G;
}

DDKernel normalize_precoder(const DDKernel& G, double Es, double* alpha) {
    if (!(Es > 0.0)) throw ValidationError("Es", "must be positive");
    const double p = mean_square(G.values);
    if (!(p > 0.0)) throw ValidationError("G", "precoder is all-zero");
    const double a = std::sqrt(Es / p);
    if (alpha) *alpha = a;
    return DDKernel(G.grid, G.values * a);
}

ScaledKernel normalize_effective(const DDKernel& H_eff) {
    const double p = mean_square(H_eff.values);
    if (!(p > 0.0)) throw ValidationError("H_eff", "effective kernel is all-zero");
    const double s = 1.0 / std::sqrt(p);
    return {DDKernel(H_eff.grid, H_eff.values * s), s};
}

Preequalizer build_preequalizer(const DDKernel& H_csi, const SensitivityMap* S, const PreeqConfig& cfg,
                                const PowerConfig& pc) {
    cfg.validate();
    const CMatrix H_f = dft2(H_csi.values);
    Preequalizer out;
    out.G_f = (S && cfg.lambda_isac > 0.0) ? isac_filter(H_f, S->values, cfg) : mmse_filter(H_f, cfg.gamma);
    out.G = normalize_precoder(DDKernel(H_csi.grid, idft2(out.G_f)), pc.symbol_energy, &out.alpha);
    return out;
}

ScaledKernel evaluation_channel(const DDKernel& H_true, const DDKernel& G, const PreeqConfig& cfg) {
    const DDKernel eff = effective_channel(H_true, G);
    if (!cfg.normalize_heff) return {eff, 1.0};
    return normalize_effective(eff);
}

}  // namespace afdmisac
