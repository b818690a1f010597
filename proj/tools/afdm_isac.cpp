// afdm-isac: command-line driver for the two-stage AFDM-ISAC link experiments.
//
//   afdm-isac [--config f] [--seed s] [--out-dir d] [--threads n] <command>
//
//   gen-pass  write pass traces, tracked slot tables, a frame-0 kernel dump and
//             the resolved config
//   train     Stage I: fit the GRU, write model.json, stage1.csv, train_log.csv
//   sweep     Stage II lambda sweep: sweep.csv and lambda_star.csv
//   ablate    SfConst / SfRandom / noNorm variants: ablation.csv
//   plot      SVG panels from sweep CSVs and heatmaps from kernel dumps

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "afdmisac/experiment.hpp"

namespace fs = std::filesystem;
using namespace afdmisac;

namespace {

struct Globals {
    std::string config;
    long long seed = -1;
    std::string out_dir;
    int threads = 0;
};

ExperimentConfig resolve(const Globals& g) {
    ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
    if (g.config.empty()) cfg.validate();
    if (g.seed >= 0) cfg.seed = static_cast<std::uint64_t>(g.seed);
    if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
    if (g.threads > 0) cfg.threads = g.threads;
    return cfg;
}

Scenario scenario(const ExperimentConfig& cfg, const std::string& passes_dir) {
    if (passes_dir.empty()) return build_scenario(cfg);
    std::vector<Pass> passes;
    for (const auto& name : cfg.presets) passes.push_back(read_pass(fs::path(passes_dir) / (name + ".txt")));
    return build_scenario(cfg, cfg.presets, std::move(passes));
}

template <class F>
void write_csv(const fs::path& file, F&& body) {
    std::ostringstream os;
    body(os);
    write_text_file(file, os.str());
    std::cerr << "wrote " << file.string() << '\n';
}

std::optional<GruPredictor> load_gru(const ExperimentConfig& cfg, const std::string& checkpoint, bool required) {
    const fs::path file = checkpoint.empty() ? cfg.out_dir / "model.json" : fs::path(checkpoint);
    if (!fs::exists(file)) {
        if (required) throw Error("checkpoint not found: " + file.string() + " (run 'train' first)");
        return std::nullopt;
    }
    auto [model, norm] = load_checkpoint(file, &cfg.gru);
    return GruPredictor(std::move(model), std::move(norm));
}

bool needs_gru(const ExperimentConfig& cfg) {
    for (auto m : cfg.csi_modes)
        if (m == CsiMode::predicted) return true;
    return false;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void cmd_gen_pass(const ExperimentConfig& cfg) {
    const Scenario sc = build_scenario(cfg);
    ensure_dir(cfg.out_dir / "passes");
    ensure_dir(cfg.out_dir / "kernels");
    for (std::size_t i = 0; i < sc.names.size(); ++i) {
        const auto& name = sc.names[i];
        write_pass(cfg.out_dir / "passes" / (name + ".txt"), sc.passes[i]);
        write_csv(cfg.out_dir / "tracked" / (name + ".txt"), [&](std::ostream& os) { write_tracked(os, sc.tracked[i]); });
        write_kernel(cfg.out_dir / "kernels" / (name + "_t0_true.txt"), snapshot_kernel(sc.passes[i].front(), cfg.grid));
    }
    write_csv(cfg.out_dir / "config.ini", [&](std::ostream& os) { write_config(os, cfg); });
}

void cmd_train(const ExperimentConfig& cfg, const std::string& passes_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario sc = scenario(cfg, passes_dir);
    const Stage1Result res = run_stage1(cfg, sc);
    save_checkpoint(cfg.out_dir / "model.json", res.training.model, res.training.norm);
    std::cerr << "wrote " << (cfg.out_dir / "model.json").string() << '\n';
    write_csv(cfg.out_dir / "train_log.csv", [&](std::ostream& os) { write_train_log(os, res.training.log); });
    write_csv(cfg.out_dir / "stage1.csv", [&](std::ostream& os) { write_stage1_csv(os, res.rows); });

    // True and predicted kernels at the first evaluation frame of each pass.
    const GruPredictor gru(res.training.model, res.training.norm);
    ensure_dir(cfg.out_dir / "kernels");
    for (std::size_t i = 0; i < sc.names.size(); ++i) {
        const auto ts = eval_frame_indices(sc.splits[i], cfg.gru.window, 1);
        if (ts.empty()) continue;
        const int t = ts.front();
        const auto& frames = sc.tracked[i].frames;
        const std::span<const SlotFrame> hist(frames.data() + t - cfg.gru.window, cfg.gru.window);
        const auto dir = cfg.out_dir / "kernels";
        write_kernel(dir / (sc.names[i] + "_true.txt"), snapshot_kernel(sc.passes[i][t], cfg.grid));
        write_kernel(dir / (sc.names[i] + "_gru.txt"), predict_kernel(gru, hist, cfg.grid));
    }
    for (const auto& r : res.rows)
        std::printf("%-10s %-12s CNMSE mean %8.3f%%  p50 %8.3f%%  p90 %8.3f%%  SMAPE %7.3f%%  MAE %7.3f deg\n",
                    r.pass.c_str(), r.predictor.c_str(), r.cnmse.mean, r.cnmse.p50, r.cnmse.p90, r.smape_amp,
                    r.mae_phase);
    std::printf("best epoch %d, val NMSE %.4g, %.1f s\n", res.training.best_epoch, res.training.best_val_nmse,
                seconds_since(t0));
}

void cmd_sweep(const ExperimentConfig& cfg, const std::string& passes_dir, const std::string& checkpoint) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto gru = load_gru(cfg, checkpoint, needs_gru(cfg));
    const Scenario sc = scenario(cfg, passes_dir);
    const auto rows = run_lambda_sweep(cfg, sc, gru ? &*gru : nullptr);
    write_csv(cfg.out_dir / "sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, rows); });
    const std::string mode = needs_gru(cfg) ? "predicted" : to_string(cfg.csi_modes.front());
    const auto ls = select_lambda_star(rows, mode);
    const auto summary = summarize_lambda_star(ls);
    write_csv(cfg.out_dir / "lambda_star.csv", [&](std::ostream& os) { write_lambda_star_csv(os, ls, summary); });
    for (const auto& s : summary)
        std::printf("SNR %5.1f dB  lambda* median %.3f [IQR %.3f]  g_MSE median %.4f [IQR %.4f]\n", s.snr_db,
                    s.lambda_median, s.lambda_iqr, s.g_median, s.g_iqr);
    std::printf("%zu rows, %.1f s\n", rows.size(), seconds_since(t0));
}

void cmd_ablate(const ExperimentConfig& cfg, const std::string& passes_dir, const std::string& checkpoint) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto gru = load_gru(cfg, checkpoint, true);
    const Scenario sc = scenario(cfg, passes_dir);
    std::vector<SweepRow> all;
    const auto rows = run_ablations(cfg, sc, *gru, &all);
    write_csv(cfg.out_dir / "ablation.csv", [&](std::ostream& os) { write_ablation_csv(os, rows); });
    write_csv(cfg.out_dir / "ablation_sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, all); });
    for (const auto& r : rows)
        std::printf("%-9s SNR %5.1f dB  lambda* median %.3f  g_MSE median %.3g\n", r.variant.c_str(), r.stats.snr_db,
                    r.stats.lambda_median, r.stats.g_median);
    std::printf("%.1f s\n", seconds_since(t0));
}

void cmd_plot(const ExperimentConfig& cfg, std::vector<std::string> sweeps, const std::string& kernels_dir) {
    const fs::path dir = cfg.out_dir / "plots";
    if (sweeps.empty())
        for (const char* f : {"sweep.csv", "ablation_sweep.csv"})
            if (fs::exists(cfg.out_dir / f)) sweeps.push_back((cfg.out_dir / f).string());
    std::size_t n = 0;
    for (const auto& f : sweeps) {
        std::ifstream is(f);
        if (!is) throw Error("cannot read " + f);
        n += plot_sweep(read_sweep_csv(is), dir).size();
    }
    const fs::path kdir = kernels_dir.empty() ? cfg.out_dir / "kernels" : fs::path(kernels_dir);
    if (fs::is_directory(kdir)) {
        std::vector<fs::path> truths;
        for (const auto& e : fs::directory_iterator(kdir)) {
            const auto name = e.path().filename().string();
            if (name.size() > 9 && name.compare(name.size() - 9, 9, "_true.txt") == 0) truths.push_back(e.path());
        }
        std::sort(truths.begin(), truths.end());
        for (const auto& t : truths) {
            const std::string stem = t.filename().string().substr(0, t.filename().string().size() - 9);
            const auto pred = kdir / (stem + "_gru.txt");
            const DDKernel H = read_kernel(t);
            const DDKernel Hp = fs::exists(pred) ? read_kernel(pred) : H;
            n += plot_kernels(H, Hp, stem, dir).size();
        }
    }
    std::printf("%zu SVG files in %s\n", n, dir.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AFDM-ISAC LEO inter-satellite link simulator"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "INI config file ([section] key = value)")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "base seed (overrides run.seed)")->check(CLI::NonNegativeNumber);
    app.add_option("--out-dir", g.out_dir, "output directory (overrides run.out_dir)");
    app.add_option("--threads", g.threads, "worker threads (overrides run.threads)")->check(CLI::PositiveNumber);

    std::string passes_dir, checkpoint, kernels_dir;
    std::vector<std::string> sweeps;
    auto* gen = app.add_subcommand("gen-pass", "generate and track the configured passes");
    auto* tr = app.add_subcommand("train", "Stage I: train the GRU and evaluate predictors");
    tr->add_option("--passes", passes_dir, "import pass traces <dir>/<preset>.txt instead of generating");
    auto* sw = app.add_subcommand("sweep", "Stage II: lambda sweep over SNR and CSI modes");
    auto* ab = app.add_subcommand("ablate", "sensitivity-map and normalization ablations");
    for (auto* sub : {sw, ab}) {
        sub->add_option("--passes", passes_dir, "import pass traces <dir>/<preset>.txt");
        sub->add_option("--checkpoint", checkpoint, "GRU checkpoint (default <out-dir>/model.json)");
    }
    auto* pl = app.add_subcommand("plot", "render SVG plots");
    pl->add_option("--sweep", sweeps, "sweep CSV files (default <out-dir>/sweep.csv, ablation_sweep.csv)");
    pl->add_option("--kernels", kernels_dir, "kernel dump directory (default <out-dir>/kernels)");

    CLI11_PARSE(app, argc, argv);
    try {
        const ExperimentConfig cfg = resolve(g);
        ensure_dir(cfg.out_dir);
        if (gen->parsed()) cmd_gen_pass(cfg);
        if (tr->parsed()) cmd_train(cfg, passes_dir);
        if (sw->parsed()) cmd_sweep(cfg, passes_dir, checkpoint);
        if (ab->parsed()) cmd_ablate(cfg, passes_dir, checkpoint);
        if (pl->parsed()) cmd_plot(cfg, sweeps, kernels_dir);
    } catch (const ValidationError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
