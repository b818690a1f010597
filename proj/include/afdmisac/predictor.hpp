// predictor.hpp - Stage-I path predictor: training loop, baselines, checkpoints.
//
// A sample is a window of L consecutive tracked frames (features) and the
// next H frames as target. Splits are chronological per pass with guard gaps
// of at least L frames; a window belongs to a split only if every frame it
// touches (inputs and targets) lies inside that split's range.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "afdmisac/features.hpp"
#include "afdmisac/gru.hpp"
#include "afdmisac/loss.hpp"

namespace afdmisac {

/// Half-open frame index range [lo, hi).
struct FrameSpan {
    int lo = 0;
    int hi = 0;
    int size() const { return hi > lo ? hi - lo : 0; }
    bool contains(int a, int b) const { return a >= lo && b <= hi; }  // [a, b) inside
};

struct SplitPlan {
    FrameSpan train, val, test;
};

struct TrainConfig {
    int batch = 32;
    double lr = 1e-3;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int epochs = 60;                // upper bound; early stopping usually ends sooner
    long schedule_steps = 0;        // cosine length in optimizer steps; 0 = epochs * steps/epoch
    double clip_norm = 1.0;
    int patience = 20;              // epochs without validation improvement
    double train_frac = 0.6;
    double val_frac = 0.15;
    int guard = -1;                 // frames between splits; -1 = window length L
    int max_train_windows = 0;      // per-epoch subsample of training windows; 0 = all
    int max_val_windows = 0;        // 0 = all
    std::uint64_t seed = 1;

    void validate(int window) const;
    int guard_for(int window) const { return guard < 0 ? window : guard; }
};

SplitPlan plan_splits(int num_frames, const TrainConfig& tc, int window);

/// Start indices of every window (L inputs + H targets) fully inside `span`.
std::vector<int> window_starts(const FrameSpan& span, int window, int horizon);

/// Features of every frame of a tracked pass, one row per frame.
RMatrix encode_sequence(const TrackedSequence& seq, const Normalizer& norm);

struct TrainLogRow {
    int epoch = 0;
    double train_total = 0.0;
    std::array<double, kNumLossTerms> train_terms{};
    double val_nmse = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    GruModel model;  // best-validation weights
    Normalizer norm;
    std::vector<TrainLogRow> log;
    int best_epoch = 0;
    double best_val_nmse = 0.0;
};

/// Fresh model with uniform init drawn from `seed`.
GruModel make_model(const GruConfig& cfg, std::uint64_t seed);

/// Trains on the train splits of all passes (one shared model); the normalizer
/// is fit on the pooled training frames only. Throws Error on divergence.
TrainResult train(std::span<const TrackedSequence> passes, GruModel init, const TrainConfig& tc,
                  const LossWeights& lw, double a_min = 1e-4);

/// Path-level complex NMSE (the L_cnmse term) of `model` on the given windows.
double eval_path_nmse(const GruModel& model, const Normalizer& norm, std::span<const RMatrix> feats,
                      std::span<const TrackedSequence> passes, std::span<const std::pair<int, int>> windows);

void write_train_log(std::ostream& os, const std::vector<TrainLogRow>& log);

// Checkpoint: versioned JSON with hyperparameters, normalizer statistics and
// flat weight arrays with named shapes. Shape mismatches on load are errors.
inline constexpr int kCheckpointVersion = 1;
void save_checkpoint(const std::filesystem::path& file, const GruModel& model, const Normalizer& norm);
/// If `expect` is given, its hyperparameters must match the stored ones.
std::pair<GruModel, Normalizer> load_checkpoint(const std::filesystem::path& file,
                                                const GruConfig* expect = nullptr);

// ---- predictor interface ----------------------------------------------------

/// One-step-ahead path predictor over tracked history (oldest first).
class PathPredictor {
public:
    virtual ~PathPredictor() = default;
    virtual std::string name() const = 0;
    virtual int min_history() const = 0;
    virtual std::vector<PredictedPath> predict(std::span<const SlotFrame> history) const = 0;
};

class GruPredictor final : public PathPredictor {
public:
    GruPredictor(GruModel model, Normalizer norm);
    std::string name() const override { return "gru"; }
    int min_history() const override { return model_.config().window; }
    std::vector<PredictedPath> predict(std::span<const SlotFrame> history) const override;

    const GruModel& model() const { return model_; }
    const Normalizer& normalizer() const { return norm_; }

private:
    GruModel model_;
    Normalizer norm_;
};

enum class BaselineKind { persistence, linear_extrapolation };

/// Persistence returns the last frame; linear extrapolates log-amplitude
/// (floored at a_min), delay and Doppler per slot, and the unwrapped phase.
/// Slots empty in either of the last two frames are held.
std::vector<PredictedPath> baseline_predict(BaselineKind kind, std::span<const SlotFrame> history,
                                            double a_min = 1e-4);

class BaselinePredictor final : public PathPredictor {
public:
    explicit BaselinePredictor(BaselineKind kind, double a_min = 1e-4) : kind_(kind), a_min_(a_min) {}
    std::string name() const override {
        return kind_ == BaselineKind::persistence ? "persistence" : "linear";
    }
    int min_history() const override { return kind_ == BaselineKind::persistence ? 1 : 2; }
    std::vector<PredictedPath> predict(std::span<const SlotFrame> history) const override {
        return baseline_predict(kind_, history, a_min_);
    }

private:
    BaselineKind kind_;
    double a_min_;
};

/// Predicted paths for the frame following `history`, synthesized on `grid`.
DDKernel predict_kernel(const PathPredictor& p, std::span<const SlotFrame> history, const DDGrid& grid);

/// Direct form: L x 5K feature window -> GRU -> decode -> kernel.
DDKernel predict_kernel(const GruModel& model, const RMatrix& window, const Normalizer& norm, const DDGrid& grid);

}  // namespace afdmisac
