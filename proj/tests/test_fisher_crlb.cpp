#include <doctest.h>

#include <random>
#include <set>

#include "afdmisac/dd_linsys.hpp"
#include "afdmisac/fisher_crlb.hpp"
#include "afdmisac/preequalizer.hpp"
#include "oracles.hpp"

using namespace afdmisac;

namespace {

CMatrix ones(const DDGrid& g) { return CMatrix::Constant(g.M, g.N, cd(1.0, 0.0)); }

CVector vec_of(const CMatrix& a) { return Eigen::Map<const CVector>(a.data(), a.size()); }

std::vector<KernelPath> random_paths(std::mt19937_64& rng, const DDGrid& g, int P) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<KernelPath> p;
    for (int k = 0; k < P; ++k)
        p.push_back({std::polar(0.2 + u(rng), 6.28 * u(rng)), (1 + 12 * u(rng)) * g.delta_tau,
                     (u(rng) - 0.5) * 10 * g.delta_nu});
    return p;
}

// Unit-gain response column built from the loop oracle.
CVector unit_column(const KernelPath& p, const DDGrid& g, const CMatrix& G, const CMatrix& X) {
    const CMatrix H = oracle::naive_kernel({{cd(1.0, 0.0), p.delay_s / g.delta_tau, p.doppler_hz / g.delta_nu}}, g.M, g.N);
    return vec_of(oracle::naive_dft2(H).cwiseProduct(G).cwiseProduct(X));
}

struct Fixture {
    oracle::Scene scene = oracle::standard_scene();
    EtaVector eta = EtaVector::from_paths(scene.paths, 3);
    CMatrix H_f = dft2(synthesize_kernel(scene.paths, scene.grid).values);
    CMatrix G = mmse_filter(H_f, scene.gamma);
    CMatrix X = ones(scene.grid);
    double sigma2 = scene.gamma * scene.grid.size();
};

std::vector<double> flat(const RMatrix& m) { return {m.data(), m.data() + m.size()}; }

}  // namespace

TEST_CASE("gain columns equal the analytic linear-model columns") {
    std::mt19937_64 rng(1);
    const DDGrid g = default_grid();
    for (int trial = 0; trial < 5; ++trial) {
        const auto paths = random_paths(rng, g, 2);
        const EtaVector eta = EtaVector::from_paths(paths, 2);
        const CMatrix G = oracle::random_cmatrix(g.M, g.N, rng), X = oracle::random_cmatrix(g.M, g.N, rng);
        const CMatrix J = jacobian_fd(eta, G, X, g);
        for (int k = 0; k < 2; ++k) {
            const KernelPath p{cd(1, 0), eta.values[4 * k + 2], eta.values[4 * k + 3]};
            const CVector v = unit_column(p, g, G, X);
            CHECK((J.col(4 * k) - v).norm() / v.norm() < 1e-8);
            CHECK((J.col(4 * k + 1) - cd(0, 1) * v).norm() / v.norm() < 1e-8);
        }
    }
}

TEST_CASE("Jacobian factorizes through the channel Jacobian") {
    Fixture f;
    std::mt19937_64 rng(2);
    const CMatrix G = oracle::random_cmatrix(16, 16, rng);
    const CMatrix a = jacobian_fd(f.eta, G, f.X, f.scene.grid);
    const CMatrix b = scale_rows(channel_jacobian(f.eta, f.scene.grid), G, f.X);
    CHECK(oracle::rel_err(a, b) < 1e-8);
}

TEST_CASE("step halving converges at second order") {
    Fixture f;
    JacobianSteps s1, s2, s4;
    s2.tau_frac = s1.tau_frac / 2, s2.nu_frac = s1.nu_frac / 2;
    s1.tau_frac *= 8, s1.nu_frac *= 8;
    s4.tau_frac = s1.tau_frac / 2, s4.nu_frac = s1.nu_frac / 2;
    const CMatrix a = jacobian_fd(f.eta, f.G, f.X, f.scene.grid, s1);
    const CMatrix b = jacobian_fd(f.eta, f.G, f.X, f.scene.grid, s4);
    // O(h^2) truncation: halving the step quarters the change
    const CMatrix ref = jacobian_fd(f.eta, f.G, f.X, f.scene.grid, s2);
    for (int p : {2, 3, 6, 7}) {
        const double e1 = (a.col(p) - ref.col(p)).norm(), e2 = (b.col(p) - ref.col(p)).norm();
        CHECK(e2 < 0.35 * e1);
    }
}

TEST_CASE("zero-gain path keeps gain columns and has flat delay/Doppler columns") {
    const DDGrid g = default_grid();
    EtaVector eta;
    eta.values.resize(4);
    eta.values << 0.0, 0.0, 3.3e-8, 1.7e3;
    const CMatrix J = jacobian_fd(eta, ones(g), ones(g), g);
    CHECK(J.col(0).norm() > 1.0);
    CHECK(J.col(2).norm() < 1e-12 * J.col(0).norm() / g.delta_tau);
    CHECK(J.col(3).norm() < 1e-12 * J.col(0).norm() / g.delta_nu);
}

TEST_CASE("gain-only FIM matches the closed form") {
    std::mt19937_64 rng(3);
    const DDGrid g = default_grid();
    for (int trial = 0; trial < 10; ++trial) {
        const auto p = random_paths(rng, g, 1);
        const EtaVector eta = EtaVector::from_paths(p, 1);
        const CMatrix G = oracle::random_cmatrix(16, 16, rng), X = ones(g);
        const double s2 = 0.1 + trial;
        const CMatrix J = jacobian_fd(eta, G, X, g).leftCols(2);
        const FimResult r = fim(J, s2);
        const double v2 = unit_column({cd(1, 0), p[0].delay_s, p[0].doppler_hz}, g, G, X).squaredNorm();
        const double d = 2.0 / s2 * v2;
        CHECK(std::abs(r.fim(0, 0) - d) <= 1e-6 * d);
        CHECK(std::abs(r.fim(1, 1) - d) <= 1e-6 * d);
        CHECK(std::abs(r.fim(0, 1)) <= 1e-6 * d);
        CHECK(r.trace == doctest::Approx(2.0 / d).epsilon(1e-6));
    }
}

TEST_CASE("single on-grid path: four-parameter FIM from first principles") {
    const DDGrid g = default_grid();
    const KernelPath p{cd(0.8, -0.3), 4 * g.delta_tau, 2 * g.delta_nu};
    const EtaVector eta = EtaVector::from_paths(std::vector{p}, 1);
    const double s2 = 2.5;
    // long-double central differences through the loop oracles
    const auto mu = [&](const RVector& e) {
        return vec_of(oracle::naive_dft2(oracle::naive_kernel(
            {{cd(e[0], e[1]), e[2] / g.delta_tau, e[3] / g.delta_nu}}, g.M, g.N)));
    };
    const double steps[4] = {1e-6, 1e-6, 1e-4 * g.delta_tau, 1e-4 * g.delta_nu};
    CMatrix J(g.size(), 4);
    for (int k = 0; k < 4; ++k) {
        RVector up = eta.values, dn = eta.values;
        up[k] += steps[k];
        dn[k] -= steps[k];
        J.col(k) = (mu(up) - mu(dn)) / (2 * steps[k]);
    }
    RMatrix I(4, 4);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) I(a, b) = 2.0 / s2 * J.col(a).dot(J.col(b)).real();
    const double expect = I.inverse().trace();
    CHECK(sensing_cost(eta, ones(g), ones(g), s2, g) == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("tr(C) is linear in the noise variance") {
    Fixture f;
    const CMatrix J = jacobian_fd(f.eta, f.G, f.X, f.scene.grid);
    const double base = fim(J, 1.0).trace;
    for (double s2 : {0.01, 0.25, 4.0, 37.0}) CHECK(fim(J, s2).trace == doctest::Approx(s2 * base).epsilon(1e-12));
}

TEST_CASE("FIM is symmetric PSD on random scenes") {
    std::mt19937_64 rng(4);
    const DDGrid g = default_grid();
    std::uniform_int_distribution<int> np(1, 3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto paths = random_paths(rng, g, np(rng));
        const EtaVector eta = EtaVector::from_paths(paths, 3);
        const CMatrix G = oracle::random_cmatrix(16, 16, rng);
        const FimResult r = fim(jacobian_fd(eta, G, ones(g), g), 0.3);
        CHECK((r.fim - r.fim.transpose()).norm() == 0.0);
        const Eigen::SelfAdjointEigenSolver<RMatrix> es(r.fim);
        CHECK(es.eigenvalues().minCoeff() >= -1e-9 * r.fim.norm());
        CHECK(r.trace > 0.0);
    }
}

TEST_CASE("dropping a bin never lowers tr(C)") {
    Fixture f;
    const CMatrix J = jacobian_fd(f.eta, f.G, f.X, f.scene.grid);
    const double base = fim(J, f.sigma2).trace;
    for (int row = 0; row < J.rows(); row += 7) {
        CMatrix Jd = J;
        Jd.row(row).setZero();
        CHECK(fim(Jd, f.sigma2).trace >= base * (1 - 1e-12));
    }
}

TEST_CASE("degenerate information is jittered or reported by name") {
    CHECK_THROWS_WITH_AS(fim(CMatrix::Zero(16, 4), 1.0), doctest::Contains("unidentifiable"), Error);
    CHECK_THROWS_WITH_AS(fim(CMatrix::Zero(16, 4), 1.0), doctest::Contains("tau1"), Error);
    // a zero-gain second path has no delay/Doppler information; the jitter rescues the inverse
    const DDGrid g = default_grid();
    EtaVector eta;
    eta.values.resize(8);
    eta.values << 1, 0, 3e-8, 1e3, 0, 0, 5e-8, 2e3;
    const FimResult r = fim(jacobian_fd(eta, ones(g), ones(g), g), 1.0);
    CHECK(r.jittered);
    CHECK(std::isfinite(r.trace));
}

TEST_CASE("stronger equalization lowers the sensing cost") {
    Fixture f;
    const CMatrix zf = mmse_filter(f.H_f, 1e-12);
    const CMatrix weak = 0.1 * f.G;
    CHECK(sensing_cost(f.eta, zf, f.X, f.sigma2, f.scene.grid) < sensing_cost(f.eta, weak, f.X, f.sigma2, f.scene.grid));
    CHECK(sensing_cost(f.eta, f.G, f.X, f.sigma2, f.scene.grid) == sensing_cost(f.eta, f.G, f.X, f.sigma2, f.scene.grid));
}

TEST_CASE("normalize_map clips and scales") {
    RMatrix m(2, 2);
    m << -1, 2, 4, 0;
    const RMatrix n = normalize_map(m);
    CHECK(n(0, 0) == 0.0);
    CHECK(n(0, 1) == 0.5);
    CHECK(n(1, 0) == 1.0);
    CHECK(normalize_map(RMatrix::Zero(3, 3)).isZero());
    CHECK(normalize_map(-RMatrix::Ones(2, 2)).isZero());
}

TEST_CASE("sensitivity map contract") {
    Fixture f;
    const auto S = sensitivity_fast(f.eta, f.G, f.X, f.sigma2, f.scene.grid);
    CHECK(S.values.minCoeff() >= 0.0);
    CHECK(S.values.maxCoeff() == 1.0);
    CHECK(S.q.isApprox(f.H_f.cwiseProduct(f.G).cwiseAbs2()));
    // bins with no probing energy get no sensitivity
    CMatrix X = f.X;
    X.row(5).setZero();
    const auto S0 = sensitivity_fast(f.eta, f.G, X, f.sigma2, f.scene.grid);
    CHECK(S0.values.row(5).isZero());
}

TEST_CASE("single on-grid path: fast and oracle agree on the argmax") {
    const DDGrid g = default_grid();
    const std::vector<KernelPath> p{{cd(1, 0), 3 * g.delta_tau, 2 * g.delta_nu}};
    const EtaVector eta = EtaVector::from_paths(p, 1);
    const CMatrix G = mmse_filter(dft2(synthesize_kernel(p, g).values), 0.1);
    const auto a = sensitivity_fast(eta, G, ones(g), 25.6, g);
    const auto b = sensitivity_oracle(eta, G, ones(g), 25.6, g);
    Eigen::Index ra, ca, rb, cb;
    a.values.maxCoeff(&ra, &ca);
    b.values.maxCoeff(&rb, &cb);
    CHECK(b.values(ra, ca) >= 0.99);
    CHECK(a.values(rb, cb) >= 0.99);
}

TEST_CASE("fast sensitivity ranks bins like the brute-force oracle") {
    Fixture f;
    const auto fast = sensitivity_fast(f.eta, f.G, f.X, f.sigma2, f.scene.grid);
    const auto slow = sensitivity_oracle(f.eta, f.G, f.X, f.sigma2, f.scene.grid);
    const auto a = flat(fast.values), b = flat(slow.values);
    CHECK(oracle::spearman(a, b) >= 0.9);
    const auto ta = oracle::top_k(a, 10), tb = oracle::top_k(b, 10);
    const std::set<int> sa(ta.begin(), ta.end());
    int overlap = 0;
    for (int i : tb) overlap += sa.count(i);
    CHECK(overlap >= 7);
}

TEST_CASE("oracle map is robust to the perturbation size") {
    Fixture f;
    const auto a = sensitivity_oracle(f.eta, f.G, f.X, f.sigma2, f.scene.grid, 1e-3);
    const auto b = sensitivity_oracle(f.eta, f.G, f.X, f.sigma2, f.scene.grid, 5e-4);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("all-zero channel gives an all-zero oracle map") {
    const DDGrid g = default_grid();
    EtaVector eta;
    eta.values.resize(4);
    eta.values << 0, 0, 3e-8, 1e3;
    const auto S = sensitivity_oracle(eta, ones(g), ones(g), 1.0, g);
    CHECK(S.values.isZero());
}
