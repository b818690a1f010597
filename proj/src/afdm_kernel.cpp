#include "afdmisac/afdm_kernel.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace afdmisac {

void DDGrid::validate() const {
    if (M < 2) throw ValidationError("M", "need at least 2 delay bins");
    if (N < 2) throw ValidationError("N", "need at least 2 Doppler bins");
    if (!(delta_tau > 0.0) || !std::isfinite(delta_tau))
        throw ValidationError("delta_tau", "must be positive");
    if (!(delta_nu > 0.0) || !std::isfinite(delta_nu))
        throw ValidationError("delta_nu", "must be positive");
}

DDKernel::DDKernel(const DDGrid& g, CMatrix v) : grid(g), values(std::move(v)) {
    if (values.rows() != g.M || values.cols() != g.N)
        throw ValidationError("values", "kernel shape does not match grid");
}

DDKernel DDKernel::zeros(const DDGrid& g) {
    return DDKernel(g, CMatrix::Zero(g.M, g.N));
}

void PowerConfig::validate() const {
    if (!(symbol_energy > 0.0)) throw ValidationError("symbol_energy", "must be positive");
    if (!(noise_var > 0.0)) throw ValidationError("noise_var", "must be positive");
}

PowerConfig PowerConfig::from_snr_db(double snr_db, double es) {
    return PowerConfig{es, es * std::pow(10.0, -snr_db / 10.0)};
}

Snr nominal_snr(const PowerConfig& pc) {
    pc.validate();
    const double lin = pc.symbol_energy / pc.noise_var;
    return Snr{lin, 10.0 * std::log10(lin)};
}

double dirichlet(double x, int M) {
    const double den = std::sin(kPi * x);
    if (std::abs(den) < 1e-12) {
        // removable singularity at integer x: limit is (-1)^{x(M-1)}
        const long long xi = std::llround(x);
        const long long e = xi * static_cast<long long>(M - 1);
        return (e % 2 == 0) ? 1.0 : -1.0;
    }
    const double mx = M * x;
    if (std::abs(mx - std::nearbyint(mx)) < 1e-12) return 0.0;  // exact zero crossing
    return std::sin(kPi * M * x) / (M * den);
}

namespace {

void check_path(const KernelPath& p) {
    if (!std::isfinite(p.gain.real()) || !std::isfinite(p.gain.imag()) ||
        !std::isfinite(p.delay_s) || !std::isfinite(p.doppler_hz))
        throw ValidationError("paths", "non-finite path parameter");
}

}  // namespace

DDKernel synthesize_kernel(std::span<const KernelPath> paths, const DDGrid& grid) {
    grid.validate();
    DDKernel out = DDKernel::zeros(grid);
    std::vector<double> dm(grid.M);
    std::vector<cd> dn(grid.N);
    for (const auto& p : paths) {
        check_path(p);
        const double lk = p.delay_s / grid.delta_tau;
        const double nk = p.doppler_hz / grid.delta_nu;
        for (int l = 0; l < grid.M; ++l) dm[l] = dirichlet((l - lk) / grid.M, grid.M);
        for (int n = 0; n < grid.N; ++n) {
            const int ns = grid.signed_doppler_index(n);
            const double ph = -kTwoPi * ns * lk / grid.N;
            dn[n] = p.gain * dirichlet((ns - nk) / grid.N, grid.N) * cd(std::cos(ph), std::sin(ph));
        }
        for (int l = 0; l < grid.M; ++l) {
            if (dm[l] == 0.0) continue;
            for (int n = 0; n < grid.N; ++n) out.values(l, n) += dm[l] * dn[n];
        }
    }
    return out;
}

DDKernel synthesize_kernel_direct(std::span<const KernelPath> paths, const DDGrid& grid) {
    grid.validate();
    DDKernel out = DDKernel::zeros(grid);
    for (const auto& p : paths) {
        check_path(p);
        const double lk = p.delay_s / grid.delta_tau;
        const double nk = p.doppler_hz / grid.delta_nu;
        for (int l = 0; l < grid.M; ++l) {
            for (int n = 0; n < grid.N; ++n) {
                const int ns = grid.signed_doppler_index(n);
                const double ph = -kTwoPi * ns * lk / grid.N;
                out.values(l, n) += p.gain * dirichlet((l - lk) / grid.M, grid.M) *
                                    dirichlet((ns - nk) / grid.N, grid.N) *
                                    std::polar(1.0, ph);
            }
        }
    }
    return out;
}

void write_kernel(std::ostream& os, const DDKernel& k) {
    os << k.grid.M << ' ' << k.grid.N << ' ' << std::setprecision(17) << k.grid.delta_tau << ' '
       << k.grid.delta_nu << '\n';
    for (int l = 0; l < k.grid.M; ++l) {
        for (int n = 0; n < k.grid.N; ++n) {
            if (n) os << ' ';
            os << k.values(l, n).real() << ',' << k.values(l, n).imag();
        }
        os << '\n';
    }
}

DDKernel read_kernel(std::istream& is) {
    DDGrid g;
    if (!(is >> g.M >> g.N >> g.delta_tau >> g.delta_nu))
        throw Error("kernel dump: malformed header");
    g.validate();
    DDKernel k = DDKernel::zeros(g);
    for (int l = 0; l < g.M; ++l) {
        for (int n = 0; n < g.N; ++n) {
            std::string tok;
            if (!(is >> tok)) throw Error("kernel dump: truncated at row " + std::to_string(l));
            const auto comma = tok.find(',');
            if (comma == std::string::npos) throw Error("kernel dump: expected re,im pair, got '" + tok + "'");
            k.values(l, n) = cd(std::stod(tok.substr(0, comma)), std::stod(tok.substr(comma + 1)));
        }
    }
    return k;
}

void write_kernel(const std::filesystem::path& file, const DDKernel& k) {
    std::ofstream os(file);
    if (!os) throw Error("cannot open " + file.string() + " for writing");
    write_kernel(os, k);
    if (!os) throw Error("write failed: " + file.string());
}

DDKernel read_kernel(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw Error("cannot open " + file.string());
    return read_kernel(is);
}

}  // namespace afdmisac
