#include "afdmisac/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "afdmisac/dd_linsys.hpp"

namespace afdmisac {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (auto p : parts) h = splitmix64(h ^ p);
    return h;
}

// Runs f(i) for i in [0, n) on `threads` workers; rethrows the first failure.
template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    const int nt = static_cast<int>(std::min<std::size_t>(threads, n));
    for (int w = 0; w < nt; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lk(err_mu);
                    if (!err) err = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

double median_of(std::vector<double> v) { return percentile(std::move(v), 0.5); }
double iqr_of(const std::vector<double>& v) { return percentile(v, 0.75) - percentile(v, 0.25); }

}  // namespace

std::uint64_t pass_seed(std::uint64_t base, std::size_t index) { return mix({base, 0x70a55ULL, index}); }

Scenario build_scenario(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<Pass> passes;
    for (std::size_t i = 0; i < cfg.presets.size(); ++i) {
        PassConfig pc = preset_pass(cfg.presets[i], pass_seed(cfg.seed, i), cfg.pass_frames);
        pc.grid = cfg.grid;
        pc.validate();
        passes.push_back(generate_pass(pc));
    }
    return build_scenario(cfg, cfg.presets, std::move(passes));
}

Scenario build_scenario(const ExperimentConfig& cfg, std::vector<std::string> names, std::vector<Pass> passes) {
    cfg.validate();
    if (names.size() != passes.size()) throw ValidationError("scenario", "names and passes differ in length");
    Scenario sc;
    for (std::size_t i = 0; i < passes.size(); ++i) {
        if (static_cast<int>(passes[i].size()) != cfg.pass_frames)
            throw ValidationError("passes.frames", "pass '" + names[i] + "' has " + std::to_string(passes[i].size()) +
                                  " frames, expected " + std::to_string(cfg.pass_frames));
        sc.tracked.push_back(track_pass(passes[i], cfg.track));
        sc.splits.push_back(plan_splits(cfg.pass_frames, cfg.train, cfg.gru.window));
    }
    sc.names = std::move(names);
    sc.passes = std::move(passes);
    return sc;
}

std::vector<int> eval_frame_indices(const SplitPlan& sp, int window, int limit) {
    std::vector<int> out;
    for (int t = sp.test.lo + window; t < sp.test.hi; ++t) {
        if (limit > 0 && static_cast<int>(out.size()) == limit) break;
        out.push_back(t);
    }
    return out;
}

// ---- Stage I --------------------------------------------------------------------

std::vector<Stage1Row> evaluate_predictors(const ExperimentConfig& cfg, const Scenario& sc, const GruPredictor& gru) {
    const BaselinePredictor pers(BaselineKind::persistence, cfg.a_min);
    const BaselinePredictor lin(BaselineKind::linear_extrapolation, cfg.a_min);
    const PathPredictor* preds[] = {&gru, &pers, &lin};
    std::vector<Stage1Row> rows;
    for (std::size_t i = 0; i < sc.passes.size(); ++i) {
        const auto frames = eval_frame_indices(sc.splits[i], cfg.gru.window);
        if (frames.empty()) throw ValidationError("passes.frames", "test split too short for one evaluation window");
        const auto& seq = sc.tracked[i].frames;
        for (const PathPredictor* p : preds) {
            std::vector<double> cn, a_t, a_p, th_t, th_p;
            for (int t : frames) {
                const auto lo = static_cast<std::size_t>(sc.splits[i].test.lo);
                const std::span<const SlotFrame> hist(seq.data() + lo, static_cast<std::size_t>(t) - lo);
                const auto paths = p->predict(hist);
                const DDKernel H = snapshot_kernel(sc.passes[i][t], cfg.grid);
                cn.push_back(cnmse(H, synthesize_kernel(to_kernel_paths(paths), cfg.grid)));
                for (std::size_t k = 0; k < paths.size(); ++k) {
                    const auto& s = seq[t][k];
                    if (!s.matched) continue;
                    a_t.push_back(s.amp);
                    a_p.push_back(paths[k].amp);
                    th_t.push_back(s.phase);
                    th_p.push_back(paths[k].phase);
                }
            }
            Stage1Row r;
            r.pass = sc.names[i];
            r.predictor = p->name();
            r.cnmse = summarize(cn);
            r.smape_amp = smape_amp(a_t, a_p);
            r.mae_phase = mae_phase(th_t, th_p, a_t);
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

Stage1Result run_stage1(const ExperimentConfig& cfg, const Scenario& sc) {
    TrainConfig tc = cfg.train;
    tc.seed = mix({cfg.seed, 0x7a1aULL});
    Stage1Result res;
    res.training = train(sc.tracked, make_model(cfg.gru, mix({cfg.seed, 0x1a17ULL})), tc, cfg.loss, cfg.a_min);
    const GruPredictor gru(res.training.model, res.training.norm);
    res.rows = evaluate_predictors(cfg, sc, gru);
    return res;
}

// ---- Stage II ---------------------------------------------------------------------

namespace {

struct PointAcc {
    double mse = 0.0, ser = 0.0, ratio = 0.0;
};

// Per evaluation frame: [mode][snr][lambda] accumulators plus CSI CNMSE per mode.
struct FrameOut {
    std::vector<PointAcc> acc;
    std::vector<double> cnmse;
};

}  // namespace

std::vector<SweepRow> run_lambda_sweep(const ExperimentConfig& cfg, const Scenario& sc, const GruPredictor* gru,
                                       Ablation ablation) {
    cfg.validate();
    const bool needs_gru = std::find(cfg.csi_modes.begin(), cfg.csi_modes.end(), CsiMode::predicted) != cfg.csi_modes.end();
    if (needs_gru && !gru) throw ValidationError("checkpoint", "predicted CSI requires a trained Stage-I model");
    const DDGrid& grid = cfg.grid;
    const int MN = grid.size();
    const std::size_t nm = cfg.csi_modes.size(), ns = cfg.snr_db.size(), nl = cfg.lambdas.size();
    const Constellation con = Constellation::make(cfg.modulation, cfg.Es);
    const CMatrix X_probe = CMatrix::Ones(grid.M, grid.N);

    RMatrix pattern;
    if (ablation == Ablation::sf_random) {
        Rng prng(mix({cfg.sf_random_seed, 0x5f7aULL}));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        pattern.resize(grid.M, grid.N);
        for (Eigen::Index i = 0; i < pattern.size(); ++i) pattern.data()[i] = u(prng);
    }

    struct Job {
        std::size_t pass;
        int t;
        int slot;  // index among the pass's evaluation frames
    };
    std::vector<Job> jobs;
    std::vector<int> frames_per_pass(sc.passes.size());
    for (std::size_t i = 0; i < sc.passes.size(); ++i) {
        const auto fr = eval_frame_indices(sc.splits[i], cfg.gru.window, cfg.eval_frames);
        if (fr.empty()) throw ValidationError("passes.frames", "test split too short for one evaluation window");
        frames_per_pass[i] = static_cast<int>(fr.size());
        for (std::size_t j = 0; j < fr.size(); ++j) jobs.push_back({i, fr[j], static_cast<int>(j)});
        if (fr.front() - cfg.outdated_lag < 0) throw ValidationError("stage2.outdated_lag", "lag reaches before frame 0");
    }

    std::vector<FrameOut> out(jobs.size());
    parallel_for(jobs.size(), cfg.threads, [&](std::size_t ji) {
        const Job& job = jobs[ji];
        const Pass& pass = sc.passes[job.pass];
        const int reps = std::max(1, (cfg.mc_frames + frames_per_pass[job.pass] - 1) / frames_per_pass[job.pass]);
        FrameOut& fo = out[ji];
        fo.acc.assign(nm * ns * nl, {});
        fo.cnmse.assign(nm, 0.0);
        const DDKernel H_true = snapshot_kernel(pass[job.t], grid);

        for (std::size_t mi = 0; mi < nm; ++mi) {
            std::vector<KernelPath> paths;
            switch (cfg.csi_modes[mi]) {
                case CsiMode::predicted: {
                    const auto& seq = sc.tracked[job.pass].frames;
                    const auto lo = static_cast<std::size_t>(sc.splits[job.pass].test.lo);
                    const auto pred = gru->predict(std::span<const SlotFrame>(seq.data() + lo, job.t - lo));
                    paths = to_kernel_paths(pred);
                    break;
                }
                case CsiMode::outdated: paths = snapshot_theta(pass[job.t - cfg.outdated_lag]); break;
                case CsiMode::true_reference: paths = snapshot_theta(pass[job.t]); break;
            }
            const DDKernel H_csi = synthesize_kernel(paths, grid);
            fo.cnmse[mi] = cnmse(H_true, H_csi);
            const EtaVector eta = EtaVector::from_paths(paths, cfg.k_prime, cfg.eta_floor);
            const CMatrix J_H = channel_jacobian(eta, grid);
            const CMatrix H_eta_f = dft2(synthesize_kernel(eta.paths(), grid).values);
            const CMatrix H_csi_f = dft2(H_csi.values);

            for (std::size_t si = 0; si < ns; ++si) {
                const PowerConfig pc = PowerConfig::from_snr_db(cfg.snr_db[si], cfg.Es);
                PreeqConfig base = PreeqConfig::from_power(pc);
                base.denom_floor = cfg.denom_floor;
                base.normalize_heff = ablation != Ablation::no_norm;

                // expansion point: the power-normalized MMSE filter
                const Preequalizer mmse = build_preequalizer(H_csi, nullptr, base, pc);
                const CMatrix G0_f = mmse.G_f * mmse.alpha;
                SensitivityMap S = sensitivity_from_jacobian(J_H, H_eta_f, G0_f, X_probe, pc.noise_var, grid);
                if (ablation == Ablation::sf_const) S.values.setOnes();
                if (ablation == Ablation::sf_random) S.values = normalize_map(S.values.cwiseAbs().cwiseProduct(pattern));
                const double J0 = fim(scale_rows(J_H, G0_f, X_probe), pc.noise_var).trace;
                const double rx_noise = pc.noise_var * MN;

                for (std::size_t li = 0; li < nl; ++li) {
                    PreeqConfig pq = base;
                    pq.lambda_isac = cfg.lambdas[li];
                    const Preequalizer pre = build_preequalizer(H_csi, &S, pq, pc);
                    const double Jl = fim(scale_rows(J_H, pre.G_f * pre.alpha, X_probe), pc.noise_var).trace;
                    const ScaledKernel eff = evaluation_channel(H_true, pre.G, pq);
                    const Receiver rx = lmmse_receiver(eff.kernel, cfg.Es, rx_noise);
                    PointAcc& a = fo.acc[(mi * ns + si) * nl + li];
                    a.ratio = crlb_ratio(Jl, J0);
                    for (int r = 0; r < reps; ++r) {
                        // common random numbers: independent of CSI mode and lambda
                        Rng rng = frame_rng(mix({cfg.seed, job.pass, static_cast<std::uint64_t>(job.t), si}),
                                            static_cast<std::uint64_t>(r));
                        const auto idx = random_symbols(con, MN, rng);
                        const Frame X = symbols_to_frame(idx, con, grid);
                        Frame Y = circ_conv2(eff.kernel.values, X);
                        add_awgn(Y, rx_noise, rng);
                        a.mse += frame_mse(soft_estimate(Y, rx), X) / reps;
                        a.ser += frame_ser(detect(Y, rx, con), idx) / reps;
                    }
                }
            }
        }
    });

    std::vector<SweepRow> rows;
    for (std::size_t pi = 0; pi < sc.passes.size(); ++pi) {
        std::vector<std::size_t> mine;
        for (std::size_t ji = 0; ji < jobs.size(); ++ji)
            if (jobs[ji].pass == pi) mine.push_back(ji);
        const double n = static_cast<double>(mine.size());
        for (std::size_t si = 0; si < ns; ++si)
            for (std::size_t li = 0; li < nl; ++li)
                for (std::size_t mi = 0; mi < nm; ++mi) {
                    SweepRow r;
                    r.pass = sc.names[pi];
                    r.ablation = to_string(ablation);
                    r.snr_db = cfg.snr_db[si];
                    r.lambda = cfg.lambdas[li];
                    r.csi_mode = to_string(cfg.csi_modes[mi]);
                    r.seed = cfg.seed;
                    for (std::size_t ji : mine) {
                        const PointAcc& a = out[ji].acc[(mi * ns + si) * nl + li];
                        r.mse += a.mse;
                        r.ser += a.ser;
                        r.crlb_ratio += a.ratio;
                        r.cnmse_mean += out[ji].cnmse[mi];
                    }
                    r.mse /= n;
                    r.ser /= n;
                    r.crlb_ratio /= n;
                    r.cnmse_mean /= n;
                    rows.push_back(std::move(r));
                }
    }
    return rows;
}

std::vector<LambdaStar> select_lambda_star(const std::vector<SweepRow>& rows, const std::string& mode) {
    // (pass, snr) groups in first-appearance order
    std::vector<std::pair<std::string, double>> keys;
    std::map<std::pair<std::string, double>, std::vector<const SweepRow*>> groups;
    for (const auto& r : rows) {
        if (r.csi_mode != mode) continue;
        const auto key = std::make_pair(r.pass, r.snr_db);
        if (!groups.count(key)) keys.push_back(key);
        groups[key].push_back(&r);
    }
    std::vector<LambdaStar> out;
    for (const auto& key : keys) {
        auto g = groups[key];
        std::stable_sort(g.begin(), g.end(), [](const SweepRow* a, const SweepRow* b) { return a->lambda < b->lambda; });
        const auto base = std::find_if(g.begin(), g.end(), [](const SweepRow* r) { return r->lambda == 0.0; });
        if (base == g.end()) throw ValidationError("lambdas", "sweep rows lack the lambda = 0 baseline");
        const double mse0 = (*base)->mse;
        LambdaStar ls{key.first, key.second, 0.0, 0.0};
        for (const SweepRow* r : g) {
            const double gain = mse0 > 0.0 ? (mse0 - r->mse) / mse0 : 0.0;
            if (gain > ls.g_mse) {
                ls.g_mse = gain;
                ls.lambda_star = r->lambda;
            }
        }
        out.push_back(ls);
    }
    return out;
}

std::vector<LambdaStarSummary> summarize_lambda_star(const std::vector<LambdaStar>& ls) {
    std::vector<double> snrs;
    for (const auto& l : ls)
        if (std::find(snrs.begin(), snrs.end(), l.snr_db) == snrs.end()) snrs.push_back(l.snr_db);
    std::vector<LambdaStarSummary> out;
    for (double s : snrs) {
        std::vector<double> lam, g;
        for (const auto& l : ls)
            if (l.snr_db == s) {
                lam.push_back(l.lambda_star);
                g.push_back(l.g_mse);
            }
        out.push_back({s, median_of(lam), iqr_of(lam), median_of(g), iqr_of(g), static_cast<int>(lam.size())});
    }
    return out;
}

std::vector<AblationRow> run_ablations(const ExperimentConfig& cfg, const Scenario& sc, const GruPredictor& gru,
                                       std::vector<SweepRow>* all_rows) {
    ExperimentConfig c = cfg;
    c.csi_modes = {CsiMode::predicted};
    std::vector<Ablation> variants{Ablation::none};
    for (auto a : cfg.ablations)
        if (a != Ablation::none) variants.push_back(a);
    std::vector<AblationRow> out;
    for (auto a : variants) {
        const auto rows = run_lambda_sweep(c, sc, &gru, a);
        for (const auto& s : summarize_lambda_star(select_lambda_star(rows))) out.push_back({to_string(a), s});
        if (all_rows) all_rows->insert(all_rows->end(), rows.begin(), rows.end());
    }
    return out;
}

}  // namespace afdmisac
