#include <doctest.h>

#include <random>

#include "afdmisac/dd_linsys.hpp"
#include "oracles.hpp"

using namespace afdmisac;

TEST_CASE("dft2 matches the naive DFT and idft2 inverts it") {
    std::mt19937_64 rng(1);
    for (int n : {8, 16}) {
        const CMatrix a = oracle::random_cmatrix(n, n, rng);
        CHECK(oracle::rel_err(dft2(a), oracle::naive_dft2(a)) < 1e-10);
        CHECK(oracle::rel_err(idft2(dft2(a)), a) < 1e-12);
        CHECK(oracle::rel_err(idft2(a), oracle::naive_dft2(a, +1) / double(n * n)) < 1e-10);
    }
    const CMatrix r = oracle::random_cmatrix(6, 10, rng);
    CHECK(oracle::rel_err(dft2(r), oracle::naive_dft2(r)) < 1e-10);
}

TEST_CASE("Parseval with the unnormalized forward transform") {
    std::mt19937_64 rng(2);
    for (int n : {8, 16}) {
        const CMatrix a = oracle::random_cmatrix(n, n, rng);
        CHECK(dft2(a).squaredNorm() == doctest::Approx(n * n * a.squaredNorm()).epsilon(1e-12));
    }
}

TEST_CASE("circular convolution matches the double loop and the convolution theorem") {
    std::mt19937_64 rng(3);
    for (int n : {8, 16}) {
        const CMatrix a = oracle::random_cmatrix(n, n, rng), b = oracle::random_cmatrix(n, n, rng);
        const CMatrix c = circ_conv2(a, b);
        CHECK(oracle::rel_err(c, oracle::naive_circ_conv2(a, b)) < 1e-10);
        CHECK(oracle::rel_err(dft2(c), dft2(a).cwiseProduct(dft2(b))) < 1e-10);
        CHECK(oracle::rel_err(c, circ_conv2(b, a)) < 1e-12);
    }
}

TEST_CASE("delta at the origin is the convolution identity") {
    std::mt19937_64 rng(4);
    const CMatrix x = oracle::random_cmatrix(8, 8, rng);
    CMatrix d = CMatrix::Zero(8, 8);
    d(0, 0) = 1.0;
    CHECK(oracle::rel_err(circ_conv2(d, x), x) < 1e-14);
    CMatrix s = CMatrix::Zero(8, 8);
    s(2, 3) = 1.0;
    const CMatrix y = circ_conv2(s, x);
    CHECK(std::abs(y(2, 3) - x(0, 0)) < 1e-13);
    CHECK(std::abs(y(1, 2) - x(7, 7)) < 1e-13);
}

TEST_CASE("shape mismatch is an error") {
    CHECK_THROWS_AS(circ_conv2(CMatrix::Zero(4, 4), CMatrix::Zero(4, 8)), ValidationError);
}

TEST_CASE("AWGN has the requested variance and is reproducible") {
    CMatrix y = CMatrix::Zero(200, 200);
    Rng rng = frame_rng(9, 0);
    add_awgn(y, 0.25, rng);
    const double v = y.squaredNorm() / y.size();
    CHECK(v == doctest::Approx(0.25).epsilon(0.02));
    const double vr = y.real().squaredNorm() / y.size();
    CHECK(vr == doctest::Approx(0.125).epsilon(0.03));
    CMatrix z = CMatrix::Zero(200, 200);
    Rng rng2 = frame_rng(9, 0);
    add_awgn(z, 0.25, rng2);
    CHECK(y == z);
    CMatrix w = CMatrix::Zero(200, 200);
    Rng rng3 = frame_rng(9, 1);
    add_awgn(w, 0.25, rng3);
    CHECK(!(y == w));
}

TEST_CASE("transmit composes channel, precoder and noise") {
    std::mt19937_64 g(5);
    DDGrid grid;
    grid.M = grid.N = 8;
    const DDKernel H(grid, oracle::random_cmatrix(8, 8, g));
    const DDKernel G(grid, oracle::random_cmatrix(8, 8, g));
    const CMatrix x = oracle::random_cmatrix(8, 8, g);
    Rng rng = frame_rng(1, 1);
    const Frame y = transmit(x, H, &G, 0.0, rng);
    CHECK(oracle::rel_err(y, oracle::naive_circ_conv2(oracle::naive_circ_conv2(H.values, G.values), x)) < 1e-10);
    CHECK(oracle::rel_err(effective_channel(H, G).values, oracle::naive_circ_conv2(H.values, G.values)) < 1e-10);
    const Frame y0 = transmit(x, H, nullptr, 0.0, rng);
    CHECK(oracle::rel_err(y0, oracle::naive_circ_conv2(H.values, x)) < 1e-10);
}
