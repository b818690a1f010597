#include <doctest.h>

#include <random>

#include "afdmisac/gru.hpp"
#include "gradcheck.hpp"

using namespace afdmisac;

namespace {

double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

TEST_CASE("all-zero weights output the head bias") {
    GruConfig cfg;
    cfg.input_dim = 10;
    cfg.hidden = 4;
    cfg.proj = 3;
    cfg.window = 5;
    cfg.residual = false;
    GruModel m(cfg);
    m.set_zero();
    for (int i = 0; i < 10; ++i) m.tensor("head.b")(i, 0) = 0.1 * i - 0.3;
    RMatrix w = RMatrix::Random(5, 10);
    const RMatrix y = m.forward_window(w);
    for (int i = 0; i < 10; ++i) CHECK(y(0, i) == doctest::Approx(0.1 * i - 0.3).epsilon(1e-15));

    cfg.residual = true;
    GruModel r(cfg);
    r.set_zero();
    const RMatrix yr = r.forward_window(w);
    for (int i = 0; i < 10; ++i) CHECK(yr(0, i) == w(4, i));
}

TEST_CASE("single unit, hand-set weights, length-2 window") {
    GruConfig cfg;
    cfg.input_dim = 5;
    cfg.hidden = 1;
    cfg.layers = 1;
    cfg.proj = 1;
    cfg.window = 2;
    cfg.residual = false;
    GruModel m(cfg);
    m.set_zero();
    const double wz = 0.5, wr = -0.4, wh = 0.9, uz = 0.3, ur = 0.7, uh = -1.1, bz = 0.1, br = -0.2, bh = 0.05;
    m.tensor("l0.Wz")(0, 0) = wz;
    m.tensor("l0.Wr")(0, 0) = wr;
    m.tensor("l0.Wh")(0, 0) = wh;
    m.tensor("l0.Uz")(0, 0) = uz;
    m.tensor("l0.Ur")(0, 0) = ur;
    m.tensor("l0.Uh")(0, 0) = uh;
    m.tensor("l0.bz")(0, 0) = bz;
    m.tensor("l0.br")(0, 0) = br;
    m.tensor("l0.bh")(0, 0) = bh;
    m.tensor("proj.W")(0, 0) = 2.0;
    m.tensor("proj.b")(0, 0) = -0.5;
    for (int i = 0; i < 5; ++i) m.tensor("head.W")(i, 0) = 1.0 + i;
    m.tensor("head.b")(2, 0) = 0.25;

    RMatrix w = RMatrix::Zero(2, 5);
    w(0, 0) = 0.8;
    w(1, 0) = -0.6;
    double h = 0.0;
    for (int t = 0; t < 2; ++t) {
        const double x = w(t, 0);
        const double z = sig(wz * x + uz * h + bz), r = sig(wr * x + ur * h + br);
        const double n = std::tanh(wh * x + uh * r * h + bh);
        h = (1 - z) * h + z * n;
    }
    const double p = 2.0 * h - 0.5;
    const RMatrix y = m.forward_window(w);
    for (int i = 0; i < 5; ++i) CHECK(std::abs(y(0, i) - ((1.0 + i) * p + (i == 2 ? 0.25 : 0.0))) < 1e-12);
}

TEST_CASE("batched forward equals per-sample forward") {
    std::mt19937_64 rng(2);
    auto p = gradcheck::random_problem(rng, 6, 2, 5, 2, 2, 4, true);
    const Mat all = p.model.forward(p.inputs);
    for (int b = 0; b < 4; ++b) {
        std::vector<Mat> one;
        for (const auto& x : p.inputs) one.push_back(x.col(b));
        const Mat y = p.model.forward(one);
        CHECK((y - all.col(b)).norm() < 1e-14);
        CHECK(y.allFinite());
    }
}

TEST_CASE("wrong window shape is an error") {
    GruConfig cfg;
    cfg.input_dim = 5;
    cfg.window = 4;
    GruModel m(cfg);
    CHECK_THROWS_AS(m.forward_window(RMatrix::Zero(3, 5)), ValidationError);
    CHECK_THROWS_AS(m.forward_window(RMatrix::Zero(4, 6)), ValidationError);
    GruConfig bad = cfg;
    bad.hidden = 0;
    CHECK_THROWS_AS(GruModel{bad}, ValidationError);
}

TEST_CASE("analytic gradients of loss o forward match central differences") {
    std::mt19937_64 rng(20240);
    std::uniform_int_distribution<int> D(1, 8), K(1, 3), L(1, 8), Ly(1, 2), Hz(1, 2), Bt(1, 3);
    for (int trial = 0; trial < 20; ++trial) {
        auto p = gradcheck::random_problem(rng, D(rng), K(rng), L(rng), Ly(rng), Hz(rng), Bt(rng), trial % 2 == 0);
        for (const auto& e : gradcheck::check(p)) {
            INFO("trial " << trial << " tensor " << e.name);
            CHECK(e.rel <= 1e-4);
        }
    }
}

TEST_CASE("tensor views are laid out contiguously") {
    GruConfig cfg;
    cfg.input_dim = 10;
    cfg.hidden = 3;
    cfg.layers = 2;
    cfg.proj = 2;
    GruModel m(cfg);
    std::size_t total = 0;
    for (const auto& s : m.tensors()) {
        CHECK(s.offset == total);
        total += s.size();
    }
    CHECK(total == m.params().size());
    CHECK(layer_tensor(1, "Uh") == "l1.Uh");
    CHECK_THROWS_AS(m.tensor("nope"), Error);
}
