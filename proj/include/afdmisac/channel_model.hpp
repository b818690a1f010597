// channel_model.hpp - synthetic LEO inter-satellite passes as sparse specular-path time series.
//
// Each path follows a linear delay/Doppler drift plus optional smooth (AR(1))
// jitter, a bounded log-amplitude random walk, and Doppler-consistent phase
// accumulation phase_t = phase_{t-1} + 2 pi nu_t T_frame + rotation. Path 1 is
// the LOS component and is always active; the others may switch off and on.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "afdmisac/afdm_kernel.hpp"

namespace afdmisac {

struct PathState {
    double amp = 0.0;         // linear gain, >= 0
    double phase = 0.0;       // radians in [-pi, pi)
    double delay_s = 0.0;
    double doppler_hz = 0.0;
    int path_id = 0;
    bool active = true;

    cd gain() const { return active ? std::polar(amp, phase) : cd{}; }
};

struct ChannelSnapshot {
    int frame_index = 0;
    std::vector<PathState> paths;
};

using Pass = std::vector<ChannelSnapshot>;

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

/// Initial-value ranges and drift rates for one path.
struct PathSpec {
    Range amp{1.0, 1.0};
    Range phase{-kPi, kPi};
    Range delay_s{0.0, 0.0};
    Range doppler_hz{0.0, 0.0};
    double delay_slope = 0.0;        // s / frame
    double doppler_slope = 0.0;      // Hz / frame
    double amp_logdrift_std = 0.0;   // per-frame std of the log-amplitude walk
    double phase_rate = 0.0;         // extra rad / frame on top of the Doppler rotation
};

struct PassConfig {
    std::string name = "custom";
    DDGrid grid;
    int num_frames = 100;
    std::uint64_t rng_seed = 1;
    double frame_period_s = 25e-6;
    std::vector<PathSpec> paths{PathSpec{}};  // size P; index 0 is LOS
    double delay_jitter_std = 0.0;            // s, stationary std of the AR(1) jitter
    double doppler_jitter_std = 0.0;          // Hz
    double jitter_corr = 0.95;                // AR(1) coefficient
    double amp_log_bound = 0.5;               // |log-amplitude excursion| cap
    double birth_death_prob = 0.0;            // per frame, per non-LOS path

    int num_paths() const { return static_cast<int>(paths.size()); }
    /// Throws ValidationError naming the offending field.
    void validate() const;
};

/// Deterministic function of cfg (including rng_seed).
Pass generate_pass(const PassConfig& cfg);

/// (complex gain, delay, Doppler) per path; inactive paths emit zero gain.
std::vector<KernelPath> snapshot_theta(const ChannelSnapshot& s);

DDKernel snapshot_kernel(const ChannelSnapshot& s, const DDGrid& grid);

/// Emulated difficulty presets: "channel1" (intermediate), "channel2" (single
/// concentrated cluster), "channel3" (faster Doppler drift, more clusters).
PassConfig preset_pass(const std::string& name, std::uint64_t seed, int num_frames = 2000);
std::vector<std::string> preset_names();

/// Default grid shared by the presets.
DDGrid default_grid(int M = 16, int N = 16);

// Pass trace table: comment header, then one row per frame per path:
//   t path_id amp phase delay_s doppler_hz active
void write_pass(std::ostream& os, const Pass& pass);
Pass read_pass(std::istream& is);
void write_pass(const std::filesystem::path& file, const Pass& pass);
Pass read_pass(const std::filesystem::path& file);

}  // namespace afdmisac
