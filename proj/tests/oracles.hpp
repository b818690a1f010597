// oracles.hpp - independent reference implementations used by the tests.
//
// Everything here is written the slow, obvious way and shares no code with
// the library beyond the basic matrix types.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <vector>

#include "afdmisac/channel_model.hpp"
#include "afdmisac/common.hpp"

namespace oracle {

using afdmisac::CMatrix;
using afdmisac::cd;
using afdmisac::RMatrix;
using afdmisac::kPi;
using lcd = std::complex<long double>;

inline CMatrix random_cmatrix(int M, int N, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    CMatrix a(M, N);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) a(i, j) = {g(rng), g(rng)};
    return a;
}

/// Unnormalized 2D DFT by quadruple loop in long double.
inline CMatrix naive_dft2(const CMatrix& a, int sign = -1) {
    const int M = static_cast<int>(a.rows()), N = static_cast<int>(a.cols());
    CMatrix out(M, N);
    const long double pi = 3.141592653589793238462643383279502884L;
    for (int k = 0; k < M; ++k)
        for (int l = 0; l < N; ++l) {
            lcd acc = 0;
            for (int m = 0; m < M; ++m)
                for (int n = 0; n < N; ++n) {
                    const long double ph = sign * 2 * pi * ((static_cast<long double>(k) * m) / M +
                                                            (static_cast<long double>(l) * n) / N);
                    acc += lcd(a(m, n).real(), a(m, n).imag()) * lcd(std::cos(ph), std::sin(ph));
                }
            out(k, l) = cd(static_cast<double>(acc.real()), static_cast<double>(acc.imag()));
        }
    return out;
}

/// C[l,n] = sum_{a,b} A[a,b] B[(l-a) mod M, (n-b) mod N], direct loops.
inline CMatrix naive_circ_conv2(const CMatrix& A, const CMatrix& B) {
    const int M = static_cast<int>(A.rows()), N = static_cast<int>(A.cols());
    CMatrix C = CMatrix::Zero(M, N);
    for (int l = 0; l < M; ++l)
        for (int n = 0; n < N; ++n) {
            lcd acc = 0;
            for (int a = 0; a < M; ++a)
                for (int b = 0; b < N; ++b) {
                    const cd x = A(a, b), y = B(((l - a) % M + M) % M, ((n - b) % N + N) % N);
                    acc += lcd(x.real(), x.imag()) * lcd(y.real(), y.imag());
                }
            C(l, n) = cd(static_cast<double>(acc.real()), static_cast<double>(acc.imag()));
        }
    return C;
}

/// sin(pi M x) / (M sin(pi x)) in long double, continuous at integer x.
inline long double dirichlet_ld(long double x, int M) {
    const long double pi = 3.141592653589793238462643383279502884L;
    const long double s = std::sin(pi * x);
    if (std::fabs(s) < 1e-15L) {
        const long double r = std::round(x);
        const long long k = static_cast<long long>(r);
        return ((k * (M - 1)) % 2 == 0) ? 1.0L : -1.0L;
    }
    return std::sin(pi * M * x) / (M * s);
}

/// The kernel synthesis formula by plain loops (centered Doppler axis).
struct Path {
    cd h;
    double l_hat;  // fractional delay index
    double n_hat;  // fractional Doppler index
};

inline CMatrix naive_kernel(const std::vector<Path>& paths, int M, int N) {
    CMatrix H = CMatrix::Zero(M, N);
    const long double pi = 3.141592653589793238462643383279502884L;
    for (const auto& p : paths)
        for (int l = 0; l < M; ++l)
            for (int n = 0; n < N; ++n) {
                const int ns = n < (N + 1) / 2 ? n : n - N;
                const long double dm = dirichlet_ld((l - p.l_hat) / M, M);
                const long double dn = dirichlet_ld((ns - p.n_hat) / N, N);
                const long double ph = -2 * pi * ns * p.l_hat / N;
                const lcd v = lcd(p.h.real(), p.h.imag()) * dm * dn * lcd(std::cos(ph), std::sin(ph));
                H(l, n) += cd(static_cast<double>(v.real()), static_cast<double>(v.imag()));
            }
    return H;
}

/// Exhaustive minimum-cost assignment over all permutations (n <= 8).
inline double brute_assignment(const RMatrix& cost, std::vector<int>* best_perm = nullptr) {
    const int n = static_cast<int>(cost.rows());
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    double best = INFINITY;
    do {
        double c = 0;
        for (int i = 0; i < n; ++i) c += cost(i, p[i]);
        if (c < best) {
            best = c;
            if (best_perm) *best_perm = p;
        }
    } while (std::next_permutation(p.begin(), p.end()));
    return best;
}

/// Gaussian tail Q(x).
inline double qfunc(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

/// Closed-form QPSK symbol error rate on AWGN with per-symbol SNR Es / sigma^2.
inline double qpsk_ser(double snr_linear) {
    const double q = qfunc(std::sqrt(snr_linear));
    return 2.0 * q - q * q;
}

inline std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<int> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * (i + j) + 1.0;
        i = j + 1;
    }
    return r;
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

/// Indices of the k largest entries (ties by lower index).
inline std::vector<int> top_k(const std::vector<double>& v, int k) {
    std::vector<int> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] > v[b]; });
    idx.resize(std::min<std::size_t>(k, idx.size()));
    return idx;
}

/// Fixed two-path scene on the default 16 x 16 grid at 10 dB, used by the
/// sensitivity agreement checks. Delay and Doppler are off-grid.
struct Scene {
    afdmisac::DDGrid grid;
    std::vector<afdmisac::KernelPath> paths;
    double gamma = 0.1;
};

inline Scene standard_scene() {
    Scene s;
    s.grid = afdmisac::default_grid();
    const double dt = s.grid.delta_tau, dn = s.grid.delta_nu;
    s.paths = {{cd(1.0, 0.0), 2.3 * dt, 1.6 * dn}, {std::polar(0.5, 0.7), 6.7 * dt, -3.2 * dn}};
    return s;
}

inline double rel_err(const CMatrix& a, const CMatrix& b) {
    const double d = (a - b).norm(), s = std::max(a.norm(), b.norm());
    return s > 0 ? d / s : d;
}

}  // namespace oracle
