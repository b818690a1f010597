#include "afdmisac/predictor.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace afdmisac {

using json = nlohmann::json;

void TrainConfig::validate(int window) const {
    if (batch < 1) throw ValidationError("batch", "must be positive");
    if (!(lr > 0.0)) throw ValidationError("lr", "must be positive");
    if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay", "must be non-negative");
    if (epochs < 1) throw ValidationError("epochs", "must be positive");
    if (schedule_steps < 0) throw ValidationError("schedule_steps", "must be non-negative");
    if (!(clip_norm > 0.0)) throw ValidationError("clip_norm", "must be positive");
    if (patience < 1) throw ValidationError("patience", "must be positive");
    if (!(train_frac > 0.0) || !(val_frac > 0.0) || train_frac + val_frac >= 1.0)
        throw ValidationError("train_frac", "need train_frac, val_frac > 0 and train_frac + val_frac < 1");
    if (guard >= 0 && guard < window) throw ValidationError("guard", "guard interval must be >= window length");
    if (max_train_windows < 0 || max_val_windows < 0)
        throw ValidationError("max_train_windows", "must be non-negative");
}

SplitPlan plan_splits(int num_frames, const TrainConfig& tc, int window) {
    tc.validate(window);
    const int g = tc.guard_for(window);
    SplitPlan p;
    p.train = {0, static_cast<int>(std::floor(tc.train_frac * num_frames))};
    p.val.lo = std::min(num_frames, p.train.hi + g);
    p.val.hi = std::min(num_frames, p.val.lo + static_cast<int>(std::floor(tc.val_frac * num_frames)));
    p.test.lo = std::min(num_frames, p.val.hi + g);
    p.test.hi = num_frames;
    return p;
}

std::vector<int> window_starts(const FrameSpan& span, int window, int horizon) {
    std::vector<int> out;
    for (int t0 = span.lo; t0 + window + horizon <= span.hi; ++t0) out.push_back(t0);
    return out;
}

RMatrix encode_sequence(const TrackedSequence& seq, const Normalizer& norm) {
    RMatrix out(static_cast<Eigen::Index>(seq.frames.size()), norm.layout().size());
    for (std::size_t t = 0; t < seq.frames.size(); ++t) out.row(static_cast<Eigen::Index>(t)) = norm.encode(seq.frames[t]);
    return out;
}

GruModel make_model(const GruConfig& cfg, std::uint64_t seed) {
    GruModel m(cfg);
    Rng rng(seed);
    m.init_uniform(rng);
    return m;
}

namespace {

using Window = std::pair<int, int>;  // (pass index, start frame)

struct Batch {
    std::vector<Mat> inputs;  // L x (F x B)
    Mat target;               // H*F x B
    Mat amps;                 // H*K x B
};

Batch make_batch(std::span<const RMatrix> feats, std::span<const TrackedSequence> passes,
                 std::span<const Window> ws, int L, int H, int K) {
    const int F = 5 * K;
    const auto B = static_cast<Eigen::Index>(ws.size());
    Batch b;
    b.inputs.assign(L, Mat(F, B));
    b.target.resize(H * F, B);
    b.amps.resize(H * K, B);
    for (Eigen::Index j = 0; j < B; ++j) {
        const auto [pi, t0] = ws[j];
        const RMatrix& f = feats[pi];
        for (int t = 0; t < L; ++t) b.inputs[t].col(j) = f.row(t0 + t).transpose();
        for (int h = 0; h < H; ++h) {
            b.target.block(h * F, j, F, 1) = f.row(t0 + L + h).transpose();
            const auto& fr = passes[pi].frames[t0 + L + h];
            for (int k = 0; k < K; ++k) b.amps(h * K + k, j) = fr[k].amp;
        }
    }
    return b;
}

// Numerator and denominator of the path-level complex NMSE.
std::pair<double, double> path_error(const Mat& pred, const Batch& b, const Normalizer& norm) {
    const auto L = norm.layout();
    const int F = L.size(), K = L.K;
    const int H = static_cast<int>(pred.rows() / F);
    double num = 0.0, den = 0.0;
    for (Eigen::Index j = 0; j < pred.cols(); ++j)
        for (int h = 0; h < H; ++h)
            for (int k = 0; k < K; ++k) {
                const int o = h * F;
                const cd hh = std::exp(norm.log_amp(k, pred(o + L.a(k), j))) *
                              cd(pred(o + L.c(k), j), pred(o + L.s(k), j));
                const double A = b.amps(h * K + k, j);
                const cd ht = A * cd(b.target(o + L.c(k), j), b.target(o + L.s(k), j));
                num += std::norm(hh - ht);
                den += A * A;
            }
    return {num, den};
}

double global_norm(const std::vector<double>& g) {
    double s = 0.0;
    for (double v : g) s += v * v;
    return std::sqrt(s);
}

constexpr std::size_t kEvalChunk = 256;

}  // namespace

double eval_path_nmse(const GruModel& model, const Normalizer& norm, std::span<const RMatrix> feats,
                      std::span<const TrackedSequence> passes, std::span<const Window> windows) {
    const auto& c = model.config();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < windows.size(); i += kEvalChunk) {
        const auto chunk = windows.subspan(i, std::min(kEvalChunk, windows.size() - i));
        const Batch b = make_batch(feats, passes, chunk, c.window, c.horizon, norm.K);
        const auto [n, d] = path_error(model.forward(b.inputs), b, norm);
        num += n;
        den += d;
    }
    return den > 0.0 ? num / den : num / std::max<double>(1.0, static_cast<double>(windows.size()));
}

TrainResult train(std::span<const TrackedSequence> passes, GruModel init, const TrainConfig& tc,
                  const LossWeights& lw, double a_min) {
    const GruConfig cfg = init.config();
    const int L = cfg.window, H = cfg.horizon;
    tc.validate(L);
    lw.validate();
    if (passes.empty()) throw ValidationError("passes", "need at least one tracked pass");
    if (cfg.input_dim % 5 != 0) throw ValidationError("input_dim", "must be 5K");
    const int K = cfg.input_dim / 5;

    std::vector<SplitPlan> plans;
    std::vector<SlotFrame> pooled;
    for (const auto& p : passes) {
        if (p.K != K) throw ValidationError("passes", "tracked K differs from model input_dim / 5");
        plans.push_back(plan_splits(static_cast<int>(p.frames.size()), tc, L));
        const auto& tr = plans.back().train;
        pooled.insert(pooled.end(), p.frames.begin() + tr.lo, p.frames.begin() + tr.hi);
    }

    TrainResult res;
    res.norm = Normalizer::fit(pooled, K, a_min);
    std::vector<RMatrix> feats;
    for (const auto& p : passes) feats.push_back(encode_sequence(p, res.norm));

    std::vector<Window> train_w, val_w;
    for (std::size_t i = 0; i < passes.size(); ++i) {
        for (int t0 : window_starts(plans[i].train, L, H)) train_w.emplace_back(static_cast<int>(i), t0);
        for (int t0 : window_starts(plans[i].val, L, H)) val_w.emplace_back(static_cast<int>(i), t0);
    }
    if (train_w.empty()) throw ValidationError("passes", "not enough frames for a training window");
    if (val_w.empty()) throw ValidationError("passes", "not enough frames for a validation window");
    if (tc.max_val_windows > 0 && static_cast<int>(val_w.size()) > tc.max_val_windows) {
        // evenly spaced, deterministic subset
        std::vector<Window> sub;
        const double step = static_cast<double>(val_w.size()) / tc.max_val_windows;
        for (int i = 0; i < tc.max_val_windows; ++i) sub.push_back(val_w[static_cast<std::size_t>(i * step)]);
        val_w = std::move(sub);
    }

    const std::size_t per_epoch = tc.max_train_windows > 0
                                      ? std::min<std::size_t>(train_w.size(), tc.max_train_windows)
                                      : train_w.size();
    const long steps_per_epoch = static_cast<long>((per_epoch + tc.batch - 1) / tc.batch);
    const long sched = tc.schedule_steps > 0 ? tc.schedule_steps : steps_per_epoch * tc.epochs;

    GruModel model = std::move(init);
    auto& theta = model.params();
    const std::size_t P = theta.size();
    std::vector<double> m(P, 0.0), v(P, 0.0), grad(P, 0.0), best = theta;
    res.best_val_nmse = std::numeric_limits<double>::infinity();
    Rng rng(tc.seed);
    long step = 0;
    int stale = 0;

    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        std::shuffle(train_w.begin(), train_w.end(), rng);
        TrainLogRow row;
        row.epoch = epoch;
        double seen = 0.0;
        for (std::size_t i = 0; i < per_epoch; i += tc.batch) {
            const auto ws = std::span<const Window>(train_w).subspan(i, std::min<std::size_t>(tc.batch, per_epoch - i));
            const Batch b = make_batch(feats, passes, ws, L, H, K);
            GruCache cache;
            const Mat y = model.forward(b.inputs, &cache);
            const LossResult lr = composite_loss(y, b.target, b.amps, lw, res.norm);
            if (!std::isfinite(lr.total)) {
                std::ostringstream os;
                os << "training diverged: non-finite loss at epoch " << epoch << ", step " << step;
                throw Error(os.str());
            }
            std::fill(grad.begin(), grad.end(), 0.0);
            model.backward(cache, lr.grad, grad);
            const double gn = global_norm(grad);
            if (!std::isfinite(gn)) throw Error("training diverged: non-finite gradient at epoch " + std::to_string(epoch));
            const double scale = gn > tc.clip_norm ? tc.clip_norm / gn : 1.0;

            const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(sched));
            const double eta = tc.lr * 0.5 * (1.0 + std::cos(kPi * frac));
            ++step;
            const double bc1 = 1.0 - std::pow(tc.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(tc.beta2, static_cast<double>(step));
            for (std::size_t p = 0; p < P; ++p) {
                const double g = grad[p] * scale;
                m[p] = tc.beta1 * m[p] + (1.0 - tc.beta1) * g;
                v[p] = tc.beta2 * v[p] + (1.0 - tc.beta2) * g * g;
                theta[p] -= eta * (tc.weight_decay * theta[p] + (m[p] / bc1) / (std::sqrt(v[p] / bc2) + tc.adam_eps));
            }
            row.lr = eta;
            const double w = static_cast<double>(ws.size());
            row.train_total += lr.total * w;
            for (int t = 0; t < kNumLossTerms; ++t) row.train_terms[t] += lr.terms[t] * w;
            seen += w;
        }
        row.train_total /= seen;
        for (auto& t : row.train_terms) t /= seen;
        row.val_nmse = eval_path_nmse(model, res.norm, feats, passes, val_w);
        if (!std::isfinite(row.val_nmse) || !model.finite())
            throw Error("training diverged: non-finite validation NMSE at epoch " + std::to_string(epoch));
        res.log.push_back(row);
        if (row.val_nmse < res.best_val_nmse) {
            res.best_val_nmse = row.val_nmse;
            res.best_epoch = epoch;
            best = theta;
            stale = 0;
        } else if (++stale >= tc.patience) {
            break;
        }
    }
    theta = best;
    res.model = std::move(model);
    return res;
}

void write_train_log(std::ostream& os, const std::vector<TrainLogRow>& log) {
    os << "epoch,train_total";
    for (auto n : kLossTermNames) os << ',' << n;
    os << ",val_nmse,lr\n";
    os << std::setprecision(10);
    for (const auto& r : log) {
        os << r.epoch << ',' << r.train_total;
        for (double t : r.train_terms) os << ',' << t;
        os << ',' << r.val_nmse << ',' << r.lr << '\n';
    }
}

// ---- checkpoint ---------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& file, const GruModel& model, const Normalizer& norm) {
    const auto& c = model.config();
    json j;
    j["format"] = "afdmisac-gru";
    j["version"] = kCheckpointVersion;
    j["config"] = {{"input_dim", c.input_dim}, {"hidden", c.hidden}, {"layers", c.layers},
                   {"proj", c.proj},           {"horizon", c.horizon}, {"window", c.window},
                   {"residual", c.residual}};
    j["normalizer"] = {{"K", norm.K},          {"a_min", norm.a_min},   {"mu_a", norm.mu_a},
                       {"sd_a", norm.sd_a},    {"mu_tau", norm.mu_tau}, {"sd_tau", norm.sd_tau},
                       {"mu_nu", norm.mu_nu},  {"sd_nu", norm.sd_nu}};
    json tensors = json::array();
    for (const auto& s : model.tensors()) {
        std::vector<double> data(model.params().begin() + static_cast<std::ptrdiff_t>(s.offset),
                                 model.params().begin() + static_cast<std::ptrdiff_t>(s.offset + s.size()));
        tensors.push_back({{"name", s.name}, {"rows", s.rows}, {"cols", s.cols}, {"data", std::move(data)}});
    }
    j["tensors"] = std::move(tensors);
    std::ofstream os(file);
    if (!os) throw Error("cannot write checkpoint " + file.string());
    os << j.dump(1) << '\n';
}

std::pair<GruModel, Normalizer> load_checkpoint(const std::filesystem::path& file, const GruConfig* expect) {
    std::ifstream is(file);
    if (!is) throw Error("cannot read checkpoint " + file.string());
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw Error("checkpoint " + file.string() + ": " + e.what());
    }
    if (j.value("format", "") != "afdmisac-gru") throw Error("checkpoint: unknown format");
    if (j.value("version", 0) != kCheckpointVersion)
        throw Error("checkpoint: unsupported version " + std::to_string(j.value("version", 0)));

    try {
        const auto& jc = j.at("config");
        GruConfig c;
        c.input_dim = jc.at("input_dim");
        c.hidden = jc.at("hidden");
        c.layers = jc.at("layers");
        c.proj = jc.at("proj");
        c.horizon = jc.at("horizon");
        c.window = jc.at("window");
        c.residual = jc.at("residual");
        if (expect && !(*expect == c)) throw Error("checkpoint: hyperparameters differ from the expected model");
        GruModel model(c);

        const auto& jt = j.at("tensors");
        if (jt.size() != model.tensors().size()) throw Error("checkpoint: tensor count mismatch");
        for (const auto& t : jt) {
            const std::string name = t.at("name");
            auto dst = model.tensor(name);
            const int rows = t.at("rows"), cols = t.at("cols");
            const auto data = t.at("data").get<std::vector<double>>();
            if (rows != dst.rows() || cols != dst.cols() || data.size() != static_cast<std::size_t>(rows) * cols)
                throw Error("checkpoint: shape mismatch for tensor '" + name + "'");
            std::copy(data.begin(), data.end(), dst.data());
        }

        const auto& jn = j.at("normalizer");
        Normalizer norm(jn.at("K").get<int>(), jn.at("a_min").get<double>());
        norm.mu_a = jn.at("mu_a").get<std::vector<double>>();
        norm.sd_a = jn.at("sd_a").get<std::vector<double>>();
        norm.mu_tau = jn.at("mu_tau").get<std::vector<double>>();
        norm.sd_tau = jn.at("sd_tau").get<std::vector<double>>();
        norm.mu_nu = jn.at("mu_nu").get<std::vector<double>>();
        norm.sd_nu = jn.at("sd_nu").get<std::vector<double>>();
        for (const auto* v : {&norm.mu_a, &norm.sd_a, &norm.mu_tau, &norm.sd_tau, &norm.mu_nu, &norm.sd_nu})
            if (static_cast<int>(v->size()) != norm.K) throw Error("checkpoint: normalizer length mismatch");
        if (5 * norm.K != c.input_dim) throw Error("checkpoint: normalizer K does not match input_dim");
        return {std::move(model), std::move(norm)};
    } catch (const json::exception& e) {
        throw Error(std::string("checkpoint: malformed field: ") + e.what());
    }
}

// ---- predictors -----------------------------------------------------------------

GruPredictor::GruPredictor(GruModel model, Normalizer norm) : model_(std::move(model)), norm_(std::move(norm)) {
    if (5 * norm_.K != model_.config().input_dim)
        throw ValidationError("normalizer", "K does not match model input_dim / 5");
}

std::vector<PredictedPath> GruPredictor::predict(std::span<const SlotFrame> history) const {
    const int L = model_.config().window;
    if (static_cast<int>(history.size()) < L)
        throw ValidationError("history", "need at least " + std::to_string(L) + " frames");
    RMatrix w(L, norm_.layout().size());
    const auto tail = history.last(L);
    for (int t = 0; t < L; ++t) w.row(t) = norm_.encode(tail[t]);
    const RMatrix y = model_.forward_window(w);
    return norm_.decode(y.row(0).transpose());
}

std::vector<PredictedPath> baseline_predict(BaselineKind kind, std::span<const SlotFrame> history, double a_min) {
    const std::size_t need = kind == BaselineKind::persistence ? 1 : 2;
    if (history.size() < need)
        throw ValidationError("history", "need at least " + std::to_string(need) + " frames");
    const SlotFrame& last = history.back();
    std::vector<PredictedPath> out(last.size());
    for (std::size_t k = 0; k < last.size(); ++k) {
        auto& p = out[k];
        const auto& s = last[k];
        p = {s.amp, s.phase, s.delay_s, s.doppler_hz, {}};
        const auto& q = history[history.size() - (need == 2 ? 2 : 1)][k];
        // A slot that was empty one frame earlier has no slope: hold it.
        if (kind == BaselineKind::linear_extrapolation && s.amp > 0.0 && q.amp > 0.0) {
            p.amp = std::exp(2.0 * std::log(std::max(s.amp, a_min)) - std::log(std::max(q.amp, a_min)));
            p.phase = wrap_phase(s.phase + wrap_phase(s.phase - q.phase));
            p.delay_s = 2.0 * s.delay_s - q.delay_s;
            p.doppler_hz = 2.0 * s.doppler_hz - q.doppler_hz;
        }
        p.gain = std::polar(p.amp, p.phase);
    }
    return out;
}

DDKernel predict_kernel(const PathPredictor& p, std::span<const SlotFrame> history, const DDGrid& grid) {
    const auto paths = p.predict(history);
    const auto kp = to_kernel_paths(paths);
    return synthesize_kernel(kp, grid);
}

DDKernel predict_kernel(const GruModel& model, const RMatrix& window, const Normalizer& norm, const DDGrid& grid) {
    const RMatrix y = model.forward_window(window);
    const auto paths = norm.decode(y.row(0).transpose());
    const auto kp = to_kernel_paths(paths);
    return synthesize_kernel(kp, grid);
}

}  // namespace afdmisac
