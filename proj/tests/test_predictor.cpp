#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "afdmisac/comms_metrics.hpp"
#include "afdmisac/predictor.hpp"
#include "oracles.hpp"

using namespace afdmisac;

namespace {

SlotState slot(double amp, double phase, double tau, double nu) {
    SlotState s;
    s.amp = amp;
    s.phase = phase;
    s.delay_s = tau;
    s.doppler_hz = nu;
    s.matched = amp > 0;
    return s;
}

// One slot per path, parameters given as functions of the frame index.
template <class F>
TrackedSequence sequence(int frames, int K, F&& f) {
    TrackedSequence s;
    s.K = K;
    for (int t = 0; t < frames; ++t) {
        SlotFrame fr;
        for (int k = 0; k < K; ++k) fr.push_back(f(t, k));
        s.frames.push_back(fr);
    }
    return s;
}

GruConfig small_gru(int K, int L) {
    GruConfig c;
    c.input_dim = 5 * K;
    c.hidden = 8;
    c.layers = 1;
    c.proj = 4;
    c.window = L;
    return c;
}

TrainConfig quick_train(int epochs) {
    TrainConfig tc;
    tc.epochs = epochs;
    tc.patience = epochs;
    tc.batch = 16;
    tc.lr = 3e-3;
    tc.seed = 5;
    return tc;
}

double kernel_cnmse(const PathPredictor& p, const TrackedSequence& seq, const std::vector<SlotFrame>& truth, int t,
                    const DDGrid& g) {
    const std::span<const SlotFrame> hist(seq.frames.data(), t);
    std::vector<KernelPath> tp;
    for (const auto& s : truth[t]) tp.push_back({s.gain(), s.delay_s, s.doppler_hz});
    return cnmse(synthesize_kernel(tp, g), predict_kernel(p, hist, g));
}

}  // namespace

TEST_CASE("encode applies the amplitude floor and the phase pair") {
    Normalizer n(1, 1e-4);
    const auto x = n.encode({slot(0.5e-4, 0.0, 1e-8, 100.0)});
    CHECK(x[0] == doctest::Approx(std::log(1e-4)));
    CHECK(x[1] == 0.0);
    CHECK(x[2] == 1.0);
}

TEST_CASE("encode then decode is the identity above the floor") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Normalizer n(3, 1e-4);
    for (int k = 0; k < 3; ++k) {
        n.mu_a[k] = -u(rng);
        n.sd_a[k] = 0.5 + u(rng);
        n.mu_tau[k] = 5e-8 * u(rng);
        n.sd_tau[k] = 1e-8 * (0.5 + u(rng));
        n.mu_nu[k] = 1e3 * u(rng);
        n.sd_nu[k] = 1e2 * (0.5 + u(rng));
    }
    for (int trial = 0; trial < 50; ++trial) {
        SlotFrame f;
        for (int k = 0; k < 3; ++k)
            f.push_back(slot(1e-4 + u(rng), (2 * u(rng) - 1) * 3.1, 1.5e-7 * u(rng), 4e3 * (u(rng) - 0.5)));
        const auto d = n.decode(n.encode(f));
        for (int k = 0; k < 3; ++k) {
            CHECK(d[k].amp == doctest::Approx(f[k].amp).epsilon(1e-9));
            CHECK(std::abs(wrap_phase(d[k].phase - f[k].phase)) < 1e-9);
            CHECK(d[k].delay_s == doctest::Approx(f[k].delay_s).epsilon(1e-9));
            CHECK(d[k].doppler_hz == doctest::Approx(f[k].doppler_hz).epsilon(1e-9));
            CHECK(std::abs(d[k].gain - std::polar(d[k].amp, d[k].phase)) < 1e-15);
        }
    }
}

TEST_CASE("decode ignores the (s, c) magnitude and handles (0, 0)") {
    Normalizer n(1, 1e-4);
    RVector x(5);
    x << 0.0, 0.6, 0.8, 0.0, 0.0;
    auto d = n.decode(x);
    CHECK(d[0].phase == doctest::Approx(std::atan2(0.6, 0.8)));
    CHECK(d[0].amp == doctest::Approx(1.0));
    x << std::log(2.0), 0.0, 0.0, 0.0, 0.0;
    d = n.decode(x);
    CHECK(d[0].phase == 0.0);
    CHECK(d[0].amp == doctest::Approx(2.0));
}

TEST_CASE("normalizer refit makes standardized features scale invariant") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g(0.0, 0.1);
    const auto seq = sequence(200, 2, [&](int t, int k) {
        return slot(0.5 * std::exp(g(rng)) / (k + 1), 0.01 * t, (2 + k + 0.001 * t) * 1e-8, 1e3 + 3 * t);
    });
    auto scaled = seq;
    for (auto& f : scaled.frames)
        for (auto& s : f) s.amp *= 3.7;
    const auto n1 = Normalizer::fit(seq.frames, 2), n2 = Normalizer::fit(scaled.frames, 2);
    CHECK(n2.mu_a[0] == doctest::Approx(n1.mu_a[0] + std::log(3.7)).epsilon(1e-12));
    const RMatrix a = encode_sequence(seq, n1), b = encode_sequence(scaled, n2);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("chronological splits keep guard gaps and windows inside their split") {
    TrainConfig tc;
    for (int L : {4, 16, 64}) {
        const SplitPlan p = plan_splits(2000, tc, L);
        CHECK(p.train.lo == 0);
        CHECK(p.val.lo - p.train.hi >= L);
        CHECK(p.test.lo - p.val.hi >= L);
        CHECK(p.test.hi == 2000);
        for (const auto* span : {&p.train, &p.val, &p.test})
            for (int t0 : window_starts(*span, L, 1)) CHECK(span->contains(t0, t0 + L + 1));
        const auto tw = window_starts(p.train, L, 1);
        CHECK(tw.back() + L + 1 <= p.train.hi);
    }
    tc.guard = 2;
    CHECK_THROWS_AS(plan_splits(100, tc, 4), ValidationError);
}

TEST_CASE("persistence and linear baselines") {
    const auto stat = sequence(10, 2, [](int, int k) { return slot(0.5 + k, 0.3, (3 + k) * 1e-8, 500.0); });
    const auto p = baseline_predict(BaselineKind::persistence, stat.frames);
    CHECK(p[0].amp == 0.5);
    CHECK(p[1].delay_s == 4e-8);

    const double d0 = 2e-8, v = 1.5e-11;
    const auto lin = sequence(10, 1, [&](int t, int) { return slot(0.8, 0.1 * t, d0 + v * t, 1e3 - 2.0 * t); });
    const auto l = baseline_predict(BaselineKind::linear_extrapolation, lin.frames);
    CHECK(l[0].delay_s == doctest::Approx(d0 + 10 * v).epsilon(1e-14));
    CHECK(l[0].doppler_hz == doctest::Approx(1e3 - 20.0).epsilon(1e-14));
    CHECK(l[0].phase == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(l[0].amp == doctest::Approx(0.8).epsilon(1e-14));

    // quadratic drift: the error is the second difference
    const double a2 = 3e-12;
    const auto quad = sequence(10, 1, [&](int t, int) { return slot(0.8, 0.0, d0 + a2 * t * t, 0.0); });
    const auto q = baseline_predict(BaselineKind::linear_extrapolation, quad.frames);
    CHECK(q[0].delay_s - (d0 + a2 * 100) == doctest::Approx(-2 * a2).epsilon(1e-6));

    // a slot born in the last frame is held, not extrapolated from zero
    auto born = lin;
    born.frames[8][0].amp = 0.0;
    const auto b = baseline_predict(BaselineKind::linear_extrapolation, born.frames);
    CHECK(b[0].amp == 0.8);
    CHECK(b[0].delay_s == born.frames[9][0].delay_s);

    CHECK_THROWS_AS(baseline_predict(BaselineKind::linear_extrapolation, std::span(lin.frames).first(1)),
                    ValidationError);
    CHECK_THROWS_AS(baseline_predict(BaselineKind::persistence, {}), ValidationError);
}

TEST_CASE("persistence kernel equals the previous frame's kernel") {
    const DDGrid g = default_grid();
    const Pass pass = generate_pass(preset_pass("channel1", 4, 50));
    const auto seq = track_pass(pass, TrackConfig::for_grid(g, 3));
    const BaselinePredictor pers(BaselineKind::persistence);
    const int t = 30;
    std::vector<KernelPath> prev;
    for (const auto& s : seq.frames[t - 1]) prev.push_back({s.gain(), s.delay_s, s.doppler_hz});
    const auto Hp = predict_kernel(pers, std::span(seq.frames.data(), t), g);
    CHECK(oracle::rel_err(Hp.values, synthesize_kernel(prev, g).values) == 0.0);
}

TEST_CASE("untrained model gives a finite, deterministic kernel") {
    const auto cfg = small_gru(2, 4);
    const GruModel m = make_model(cfg, 9);
    Normalizer n(2, 1e-4);
    const RMatrix w = RMatrix::Zero(4, 10);
    const auto a = predict_kernel(m, w, n, default_grid()), b = predict_kernel(m, w, n, default_grid());
    CHECK(a.values.allFinite());
    CHECK(a.values == b.values);
}

TEST_CASE("static channel is learned and training is deterministic") {
    const DDGrid g = default_grid();
    const auto seq = sequence(300, 2, [](int, int k) { return slot(0.9 - 0.4 * k, 0.4 + k, (2 + 4 * k) * 1e-8, 1e3 * (1 + k)); });
    const std::vector<TrackedSequence> passes{seq};
    const auto cfg = small_gru(2, 6);
    const TrainConfig tc = quick_train(60);
    const auto r1 = train(passes, make_model(cfg, 1), tc, {}, 1e-4);
    const auto r2 = train(passes, make_model(cfg, 1), tc, {}, 1e-4);
    CHECK(r1.model.params() == r2.model.params());
    CHECK(r1.best_val_nmse < 1e-3);
    const GruPredictor gp(r1.model, r1.norm);
    CHECK(kernel_cnmse(gp, seq, seq.frames, 290, g) < 1e-3 * 100);
}

TEST_CASE("trained model beats persistence on a drifting pass") {
    const DDGrid g = default_grid();
    const auto seq = sequence(600, 1, [](int t, int) {
        return slot(0.9, wrap_phase(0.35 * t), (3 + 0.004 * t) * 1e-8, 2000.0 + 0.5 * t);
    });
    const std::vector<TrackedSequence> passes{seq};
    const auto cfg = small_gru(1, 6);
    const auto res = train(passes, make_model(cfg, 2), quick_train(40), {}, 1e-4);
    const GruPredictor gp(res.model, res.norm);
    const BaselinePredictor pers(BaselineKind::persistence);
    const SplitPlan sp = plan_splits(600, quick_train(40), 6);
    double e_gru = 0, e_per = 0;
    int n = 0;
    for (int t = sp.test.lo + 6; t < sp.test.hi; ++t, ++n) {
        e_gru += kernel_cnmse(gp, seq, seq.frames, t, g);
        e_per += kernel_cnmse(pers, seq, seq.frames, t, g);
    }
    CHECK(e_gru / n < e_per / n);
}

TEST_CASE("training rejects unusable inputs and reports divergence") {
    const auto seq = sequence(40, 1, [](int, int) { return slot(1, 0, 1e-8, 0); });
    const std::vector<TrackedSequence> passes{seq};
    CHECK_THROWS_AS(train(passes, make_model(small_gru(1, 16), 1), quick_train(2), {}, 1e-4), ValidationError);
    CHECK_THROWS_AS(train(passes, make_model(small_gru(2, 4), 1), quick_train(2), {}, 1e-4), ValidationError);
    const auto big = sequence(200, 1, [](int t, int) { return slot(1, 0.1 * t, 1e-8, 0); });
    TrainConfig tc = quick_train(5);
    tc.lr = 1e300;
    tc.clip_norm = 1e300;
    CHECK_THROWS_AS(train(std::vector<TrackedSequence>{big}, make_model(small_gru(1, 4), 1), tc, {}, 1e-4), Error);
}

TEST_CASE("checkpoint round trip and mismatch errors") {
    const auto dir = std::filesystem::temp_directory_path() / "afdmisac_ckpt_test";
    std::filesystem::create_directories(dir);
    const auto cfg = small_gru(2, 5);
    const GruModel m = make_model(cfg, 3);
    Normalizer n(2, 1e-4);
    n.mu_tau = {1.25e-8, 3.5e-8};
    n.sd_nu = {17.0, 0.1};
    save_checkpoint(dir / "m.json", m, n);
    const auto [m2, n2] = load_checkpoint(dir / "m.json", &cfg);
    CHECK(m2.params() == m.params());
    CHECK(n2.mu_tau == n.mu_tau);
    CHECK(n2.sd_nu == n.sd_nu);

    GruConfig other = cfg;
    other.hidden = 9;
    CHECK_THROWS_AS(load_checkpoint(dir / "m.json", &other), Error);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), Error);
    std::ofstream(dir / "bad.json") << "{\"format\": \"afdmisac-gru\", \"version\": 1}";
    CHECK_THROWS_AS(load_checkpoint(dir / "bad.json"), Error);
    std::ofstream(dir / "junk.json") << "not json";
    CHECK_THROWS_AS(load_checkpoint(dir / "junk.json"), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("train log CSV layout") {
    std::vector<TrainLogRow> log(2);
    log[1].epoch = 2;
    std::ostringstream os;
    write_train_log(os, log);
    const std::string s = os.str();
    CHECK(s.rfind("epoch,train_total,L_A,L_theta,L_tau,L_nu,L_uc,L_cnmse,val_nmse,lr\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 3);
}
