// experiment.hpp - end-to-end experiments: Stage-I training/evaluation,
// Stage-II lambda sweeps under predicted vs outdated CSI, lambda* statistics
// and the sensitivity-map / normalization ablations.
//
// Stage-II receiver bookkeeping: the evaluation channel H_eff = H_true (*) G is
// scaled to unit mean-square, so a flat effective channel has main tap
// sqrt(MN). Receiver noise is sigma_w^2 * MN per DD entry, which makes the
// per-symbol SNR of a flat channel equal to Es / sigma_w^2. The noNorm
// ablation keeps the raw H_eff and the same noise, so lambda also moves the
// effective SNR.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "afdmisac/channel_model.hpp"
#include "afdmisac/comms_metrics.hpp"
#include "afdmisac/fisher_crlb.hpp"
#include "afdmisac/predictor.hpp"
#include "afdmisac/preequalizer.hpp"

namespace afdmisac {

enum class CsiMode { predicted, outdated, true_reference };
enum class Ablation { none, sf_const, sf_random, no_norm };

std::string to_string(CsiMode m);
std::string to_string(Ablation a);
CsiMode parse_csi_mode(const std::string& s);
Ablation parse_ablation(const std::string& s);

inline constexpr int kConfigSchemaVersion = 1;

struct ExperimentConfig {
    DDGrid grid;
    std::vector<std::string> presets{"channel1", "channel2", "channel3"};
    int pass_frames = 2000;

    TrackConfig track;  // scales follow the grid unless set explicitly
    GruConfig gru;
    TrainConfig train;
    LossWeights loss;
    double a_min = 1e-4;

    std::vector<double> snr_db{5, 10, 15, 20};
    std::vector<double> lambdas{0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5};
    std::vector<CsiMode> csi_modes{CsiMode::predicted, CsiMode::outdated};
    int outdated_lag = 1;
    int eval_frames = 200;
    int mc_frames = 200;  // symbol frames per grid point, spread over the evaluation frames
    int k_prime = 3;
    double eta_floor = 1e-2;  // drop paths weaker than this fraction of the strongest from eta
    Modulation modulation = Modulation::qpsk;
    double Es = 1.0;
    double denom_floor = -1.0;  // <= 0: gamma

    std::vector<Ablation> ablations{Ablation::sf_const, Ablation::sf_random, Ablation::no_norm};
    std::uint64_t sf_random_seed = 7;

    std::uint64_t seed = 1;
    int threads = 1;
    std::filesystem::path out_dir = "out";

    /// Throws ValidationError naming the offending key.
    void validate() const;
};

/// INI-style file: [section] headers and key = value lines. Unknown keys are errors.
ExperimentConfig load_config(const std::filesystem::path& file);
ExperimentConfig parse_config(std::istream& is);
/// Writes the full configuration in the same format (documented defaults).
void write_config(std::ostream& os, const ExperimentConfig& cfg);

/// Generated and tracked passes for every preset of the config.
struct Scenario {
    std::vector<std::string> names;
    std::vector<Pass> passes;
    std::vector<TrackedSequence> tracked;
    std::vector<SplitPlan> splits;
};

std::uint64_t pass_seed(std::uint64_t base, std::size_t index);
Scenario build_scenario(const ExperimentConfig& cfg);
/// Scenario from imported passes; every pass must hold cfg.pass_frames frames.
Scenario build_scenario(const ExperimentConfig& cfg, std::vector<std::string> names, std::vector<Pass> passes);

// ---- Stage I ------------------------------------------------------------------

struct Stage1Row {
    std::string pass;
    std::string predictor;
    Summary cnmse;  // percent
    double smape_amp = 0.0;
    double mae_phase = 0.0;
};

struct Stage1Result {
    TrainResult training;
    std::vector<Stage1Row> rows;
};

/// Evaluation frames of a pass: targets t with a full window inside the test split.
std::vector<int> eval_frame_indices(const SplitPlan& sp, int window, int limit = 0);

Stage1Result run_stage1(const ExperimentConfig& cfg, const Scenario& sc);
std::vector<Stage1Row> evaluate_predictors(const ExperimentConfig& cfg, const Scenario& sc,
                                           const GruPredictor& gru);

// ---- Stage II -----------------------------------------------------------------

struct SweepRow {
    std::string pass;
    std::string ablation;
    double snr_db = 0.0;
    double lambda = 0.0;
    std::string csi_mode;
    double mse = 0.0;
    double ser = 0.0;
    double crlb_ratio = 0.0;
    double cnmse_mean = 0.0;  // CSI kernel vs truth, percent
    std::uint64_t seed = 0;
};

/// One row per (pass, SNR, lambda, mode) in that nesting order.
std::vector<SweepRow> run_lambda_sweep(const ExperimentConfig& cfg, const Scenario& sc, const GruPredictor* gru,
                                       Ablation ablation = Ablation::none);

struct LambdaStar {
    std::string pass;
    double snr_db = 0.0;
    double lambda_star = 0.0;
    double g_mse = 0.0;
};

struct LambdaStarSummary {
    double snr_db = 0.0;
    double lambda_median = 0.0;
    double lambda_iqr = 0.0;
    double g_median = 0.0;
    double g_iqr = 0.0;
    int n = 0;
};

/// lambda* = argmax_lambda (MSE(0) - MSE(lambda)) / MSE(0) per (pass, SNR) for
/// rows of `mode`; ties go to the smallest lambda.
std::vector<LambdaStar> select_lambda_star(const std::vector<SweepRow>& rows, const std::string& mode = "predicted");
std::vector<LambdaStarSummary> summarize_lambda_star(const std::vector<LambdaStar>& ls);

struct AblationRow {
    std::string variant;
    LambdaStarSummary stats;
};

/// Baseline plus every configured ablation, predicted CSI only.
std::vector<AblationRow> run_ablations(const ExperimentConfig& cfg, const Scenario& sc, const GruPredictor& gru,
                                       std::vector<SweepRow>* all_rows = nullptr);

// ---- artifacts ---------------------------------------------------------------------

inline constexpr int kCsvSchemaVersion = 1;

void write_stage1_csv(std::ostream& os, const std::vector<Stage1Row>& rows);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(std::istream& is);
void write_lambda_star_csv(std::ostream& os, const std::vector<LambdaStar>& per_pass,
                           const std::vector<LambdaStarSummary>& summary);
void write_ablation_csv(std::ostream& os, const std::vector<AblationRow>& rows);

/// Writes `content` to `file`, creating parent directories; errors name the path.
void write_text_file(const std::filesystem::path& file, const std::string& content);

/// Fig.-6-style SVG panels (MSE, SER, CRLB ratio vs lambda) per pass and SNR.
/// Returns the written files.
std::vector<std::filesystem::path> plot_sweep(const std::vector<SweepRow>& rows, const std::filesystem::path& dir);

/// |H|, |H_hat| and |H - H_hat| heatmaps in dB (max 0 dB, floor -40 dB).
std::vector<std::filesystem::path> plot_kernels(const DDKernel& H, const DDKernel& H_hat, const std::string& tag,
                                                const std::filesystem::path& dir);

}  // namespace afdmisac
