#include "afdmisac/fisher_crlb.hpp"

#include <algorithm>
#include <numeric>

#include "afdmisac/dd_linsys.hpp"

namespace afdmisac {

namespace {

void check_shape(const CMatrix& a, const DDGrid& g, const char* field) {
    if (a.rows() != g.M || a.cols() != g.N)
        throw ValidationError(field, "expected " + std::to_string(g.M) + " x " + std::to_string(g.N));
}

CVector vec(const CMatrix& a) {
    // row-major storage: element (m, n) lands at m * N + n
    return Eigen::Map<const CVector>(a.data(), a.size());
}

CMatrix channel_f(const EtaVector& eta, const DDGrid& grid) {
    const auto p = eta.paths();
    return dft2(synthesize_kernel(p, grid).values);
}

}  // namespace

std::vector<KernelPath> EtaVector::paths() const {
    validate();
    std::vector<KernelPath> out(num_paths());
    for (int k = 0; k < num_paths(); ++k)
        out[k] = KernelPath{cd(values[4 * k], values[4 * k + 1]), values[4 * k + 2], values[4 * k + 3]};
    return out;
}

void EtaVector::validate() const {
    if (values.size() == 0 || values.size() % 4 != 0) throw ValidationError("eta", "length must be a positive multiple of 4");
    if (!values.allFinite()) throw ValidationError("eta", "non-finite parameter");
}

EtaVector EtaVector::from_paths(std::span<const KernelPath> paths, int k_prime, double rel_floor) {
    if (k_prime < 1) throw ValidationError("k_prime", "must be positive");
    std::vector<int> idx(paths.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return std::abs(paths[a].gain) > std::abs(paths[b].gain); });
    const double top = idx.empty() ? 0.0 : std::abs(paths[idx[0]].gain);
    std::vector<int> keep;
    for (int i : idx) {
        if (static_cast<int>(keep.size()) == k_prime) break;
        if (std::abs(paths[i].gain) >= rel_floor * top) keep.push_back(i);
    }
    if (keep.empty()) throw ValidationError("paths", "no paths to parameterize");
    EtaVector e;
    e.values.resize(4 * static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const auto& p = paths[keep[k]];
        e.values.segment(4 * k, 4) << p.gain.real(), p.gain.imag(), p.delay_s, p.doppler_hz;
    }
    return e;
}

std::string EtaVector::param_name(int p) {
    static const char* names[] = {"re_h", "im_h", "tau", "nu"};
    return std::string(names[p % 4]) + std::to_string(p / 4 + 1);
}

CVector mean_response(const EtaVector& eta, const CMatrix& G_f, const CMatrix& X_f, const DDGrid& grid) {
    check_shape(G_f, grid, "G_f");
    check_shape(X_f, grid, "X_f");
    const CMatrix H = channel_f(eta, grid);
    return vec(H.cwiseProduct(G_f).cwiseProduct(X_f));
}

CMatrix channel_jacobian(const EtaVector& eta, const DDGrid& grid, const JacobianSteps& steps) {
    eta.validate();
    const auto P = eta.values.size();
    CMatrix J(static_cast<Eigen::Index>(grid.size()), P);
    for (Eigen::Index p = 0; p < P; ++p) {
        double h = steps.gain;
        if (p % 4 == 2) h = steps.tau_frac * grid.delta_tau;
        if (p % 4 == 3) h = steps.nu_frac * grid.delta_nu;
        EtaVector up = eta, dn = eta;
        up.values[p] += h;
        dn.values[p] -= h;
        J.col(p) = (vec(channel_f(up, grid)) - vec(channel_f(dn, grid))) / (2.0 * h);
    }
    return J;
}

CMatrix scale_rows(const CMatrix& J_H, const CMatrix& G_f, const CMatrix& X_f) {
    if (J_H.rows() != G_f.size() || G_f.rows() != X_f.rows() || G_f.cols() != X_f.cols())
        throw ValidationError("G_f", "shape does not match the Jacobian");
    const CVector w = vec(G_f.cwiseProduct(X_f));
    return w.asDiagonal() * J_H;
}

CMatrix jacobian_fd(const EtaVector& eta, const CMatrix& G_f, const CMatrix& X_f, const DDGrid& grid,
                    const JacobianSteps& steps) {
    check_shape(G_f, grid, "G_f");
    check_shape(X_f, grid, "X_f");
    eta.validate();
    const auto P = eta.values.size();
    CMatrix J(static_cast<Eigen::Index>(grid.size()), P);
    for (Eigen::Index p = 0; p < P; ++p) {
        double h = steps.gain;
        if (p % 4 == 2) h = steps.tau_frac * grid.delta_tau;
        if (p % 4 == 3) h = steps.nu_frac * grid.delta_nu;
        EtaVector up = eta, dn = eta;
        up.values[p] += h;
        dn.values[p] -= h;
        J.col(p) = (mean_response(up, G_f, X_f, grid) - mean_response(dn, G_f, X_f, grid)) / (2.0 * h);
    }
    return J;
}

FimResult fim(const CMatrix& J, double sigma_w2) {
    if (!(sigma_w2 > 0.0)) throw ValidationError("sigma_w2", "must be positive");
    FimResult r;
    r.jacobian = J;
    const Eigen::Index P = J.cols();
    RMatrix I = (2.0 / sigma_w2) * (J.adjoint() * J).real();
    I = 0.5 * (I + I.transpose()).eval();
    r.fim = I;

    auto unidentifiable = [&](const RMatrix& A) {
        std::string which;
        const Eigen::SelfAdjointEigenSolver<RMatrix> es(A);
        const double tol = 1e-12 * std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
        for (Eigen::Index p = 0; p < P; ++p)
            if (!(std::abs(A(p, p)) > tol)) which += (which.empty() ? "" : ", ") + EtaVector::param_name(static_cast<int>(p));
        if (which.empty()) which = "(linear combination)";
        throw Error("unidentifiable parameterization: no information on " + which);
    };

    const double tr = I.trace();
    if (!(tr > 0.0) || !std::isfinite(tr)) unidentifiable(I);
    // Gains, seconds and hertz differ by many orders of magnitude, so the raw
    // condition number says little. Conditioning and jitter are judged on the
    // unit-diagonal matrix D^-1 I D^-1; the inverse is mapped back afterwards.
    RVector d(P);
    for (Eigen::Index p = 0; p < P; ++p) d[p] = I(p, p) > 0.0 ? std::sqrt(I(p, p)) : 1.0;
    RMatrix A = d.cwiseInverse().asDiagonal() * I * d.cwiseInverse().asDiagonal();
    const Eigen::SelfAdjointEigenSolver<RMatrix> es(A);
    const double lmax = es.eigenvalues().maxCoeff();
    const double lmin = es.eigenvalues().minCoeff();
    if (!(lmin > 0.0) || lmax / lmin > 1e12) {
        A.diagonal().array() += 1e-10 * A.trace() / static_cast<double>(P);
        r.jittered = true;
    }
    const Eigen::LLT<RMatrix> llt(A);
    if (llt.info() != Eigen::Success) unidentifiable(I);
    r.crlb = d.cwiseInverse().asDiagonal() * llt.solve(RMatrix::Identity(P, P)) * d.cwiseInverse().asDiagonal();
    r.crlb = 0.5 * (r.crlb + r.crlb.transpose()).eval();
    r.trace = r.crlb.trace();
    if (!std::isfinite(r.trace)) unidentifiable(I);
    return r;
}

double sensing_cost(const EtaVector& eta, const CMatrix& G_f, const CMatrix& X_f, double sigma_w2,
                    const DDGrid& grid, const JacobianSteps& steps) {
    return fim(jacobian_fd(eta, G_f, X_f, grid, steps), sigma_w2).trace;
}

RMatrix normalize_map(RMatrix raw) {
    raw = raw.cwiseMax(0.0);
    const double mx = raw.maxCoeff();
    if (mx > 0.0) raw /= mx;
    return raw;
}

SensitivityMap sensitivity_from_jacobian(const CMatrix& J_H, const CMatrix& H_f, const CMatrix& G_f_mmse,
                                         const CMatrix& X_f, double sigma_w2, const DDGrid& grid) {
    check_shape(H_f, grid, "H_f");
    check_shape(G_f_mmse, grid, "G_f");
    check_shape(X_f, grid, "X_f");
    SensitivityMap s;
    s.grid = grid;
    s.q = H_f.cwiseProduct(G_f_mmse).cwiseAbs2();
    s.values = RMatrix::Zero(grid.M, grid.N);
    const CMatrix J = scale_rows(J_H, G_f_mmse, X_f);
    const FimResult f = fim(J, sigma_w2);
    const RMatrix C2 = f.crlb * f.crlb;
    const double eps_q = 1e-12 * s.q.maxCoeff();
    for (int m = 0; m < grid.M; ++m)
        for (int n = 0; n < grid.N; ++n) {
            const auto row = J.row(static_cast<Eigen::Index>(m) * grid.N + n);
            // Re{j C^2 j^H} with real C^2
            const double v = (row.conjugate() * C2.cast<cd>() * row.transpose()).real()(0, 0);
            s.values(m, n) = (2.0 / sigma_w2) * v / std::max(s.q(m, n), eps_q);
        }
    s.values = normalize_map(std::move(s.values));
    return s;
}

SensitivityMap sensitivity_fast(const EtaVector& eta, const CMatrix& G_f_mmse, const CMatrix& X_f,
                                double sigma_w2, const DDGrid& grid, const JacobianSteps& steps) {
    const CMatrix J_H = channel_jacobian(eta, grid, steps);
    return sensitivity_from_jacobian(J_H, channel_f(eta, grid), G_f_mmse, X_f, sigma_w2, grid);
}

SensitivityMap sensitivity_oracle(const EtaVector& eta, const CMatrix& G_f_mmse, const CMatrix& X_f,
                                  double sigma_w2, const DDGrid& grid, double eps, const JacobianSteps& steps) {
    if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("eps", "must lie in (0, 1)");
    check_shape(G_f_mmse, grid, "G_f");
    SensitivityMap s;
    s.grid = grid;
    s.q = channel_f(eta, grid).cwiseProduct(G_f_mmse).cwiseAbs2();
    s.values = RMatrix::Zero(grid.M, grid.N);
    CMatrix G = G_f_mmse;
    for (int m = 0; m < grid.M; ++m)
        for (int n = 0; n < grid.N; ++n) {
            const double q = s.q(m, n);
            if (!(q > 0.0)) continue;  // no power on this bin: scaling it changes nothing
            const cd g0 = G_f_mmse(m, n);
            G(m, n) = g0 * std::sqrt(1.0 + eps);
            const double up = sensing_cost(eta, G, X_f, sigma_w2, grid, steps);
            G(m, n) = g0 * std::sqrt(1.0 - eps);
            const double dn = sensing_cost(eta, G, X_f, sigma_w2, grid, steps);
            G(m, n) = g0;
            s.values(m, n) = -(up - dn) / (2.0 * eps * q);
        }
    s.values = normalize_map(std::move(s.values));
    return s;
}

}  // namespace afdmisac
