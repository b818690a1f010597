// afdm_kernel.hpp - delay-Doppler grid and AFDM kernel synthesis.
//
// A kernel H[l,n] is built from a sparse set of specular paths:
//
//   H[l,n] = sum_k h_k * D_M((l - lk)/M) * D_N((n_s - nk)/N) * exp(-j 2 pi n_s lk / N)
//
// with fractional indices lk = tau_k / delta_tau, nk = nu_k / delta_nu and
// D_M(x) = sin(pi M x) / (M sin(pi x)). The Doppler axis is centered: bin n
// carries the signed index n_s = n for n < N/2 and n - N otherwise, so
// negative Doppler shifts land in the upper half of the column range.

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "afdmisac/common.hpp"

namespace afdmisac {

struct DDGrid {
    int M = 16;                 // delay bins
    int N = 16;                 // Doppler bins
    double delta_tau = 10e-9;   // seconds per delay bin
    double delta_nu = 1e3;      // hertz per Doppler bin

    void validate() const;
    int size() const { return M * N; }
    /// Largest representable delay (exclusive).
    double max_delay() const { return M * delta_tau; }
    /// Largest representable |Doppler| (exclusive).
    double max_abs_doppler() const { return 0.5 * N * delta_nu; }
    /// Signed Doppler index carried by column n.
    int signed_doppler_index(int n) const { return n < (N + 1) / 2 ? n : n - N; }

    bool operator==(const DDGrid&) const = default;
};

struct DDKernel {
    DDGrid grid;
    CMatrix values;

    DDKernel() = default;
    DDKernel(const DDGrid& g, CMatrix v);
    static DDKernel zeros(const DDGrid& g);
};

struct PowerConfig {
    double symbol_energy = 1.0;  // Es
    double noise_var = 1.0;      // sigma_w^2

    void validate() const;
    double gamma() const { return noise_var / symbol_energy; }
    static PowerConfig from_snr_db(double snr_db, double es = 1.0);
};

struct Snr {
    double linear;
    double db;
};

Snr nominal_snr(const PowerConfig& pc);

/// One specular path in kernel coordinates: complex gain, delay and Doppler.
struct KernelPath {
    cd gain;
    double delay_s = 0.0;
    double doppler_hz = 0.0;
};

/// Normalized Dirichlet kernel sin(pi M x)/(M sin(pi x)); peak value 1.
double dirichlet(double x, int M);

/// Table-driven synthesis, O(K(M+N)) trigonometry plus O(KMN) multiply-adds.
DDKernel synthesize_kernel(std::span<const KernelPath> paths, const DDGrid& grid);

/// Entry-by-entry evaluation of the synthesis sum. Reference path for the table version.
DDKernel synthesize_kernel_direct(std::span<const KernelPath> paths, const DDGrid& grid);

// Kernel dump: header line "M N delta_tau delta_nu", then M lines of N "re,im" pairs.
void write_kernel(const std::filesystem::path& file, const DDKernel& k);
DDKernel read_kernel(const std::filesystem::path& file);
void write_kernel(std::ostream& os, const DDKernel& k);
DDKernel read_kernel(std::istream& is);

}  // namespace afdmisac
