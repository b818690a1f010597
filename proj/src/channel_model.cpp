#include "afdmisac/channel_model.hpp"

#include "afdmisac/dd_linsys.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace afdmisac {

namespace {

std::string path_field(int p, const char* name) {
    return "paths[" + std::to_string(p) + "]." + name;
}

void check_range(const Range& r, const std::string& field) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi)
        throw ValidationError(field, "invalid range [" + std::to_string(r.lo) + ", " + std::to_string(r.hi) + "]");
}

}  // namespace

void PassConfig::validate() const {
    grid.validate();
    if (num_frames < 1) throw ValidationError("num_frames", "must be >= 1");
    if (paths.empty()) throw ValidationError("paths", "need at least the LOS path");
    if (!(frame_period_s >= 0.0)) throw ValidationError("frame_period_s", "must be non-negative");
    if (delay_jitter_std < 0.0) throw ValidationError("delay_jitter_std", "must be non-negative");
    if (doppler_jitter_std < 0.0) throw ValidationError("doppler_jitter_std", "must be non-negative");
    if (!(jitter_corr >= 0.0 && jitter_corr < 1.0)) throw ValidationError("jitter_corr", "must lie in [0, 1)");
    if (amp_log_bound < 0.0) throw ValidationError("amp_log_bound", "must be non-negative");
    if (!(birth_death_prob >= 0.0 && birth_death_prob <= 1.0))
        throw ValidationError("birth_death_prob", "must be a probability");

    const double t_last = num_frames - 1;
    const double tau_max = grid.max_delay();
    const double nu_max = grid.max_abs_doppler();
    const double tau_margin = 4.0 * delay_jitter_std;
    const double nu_margin = 4.0 * doppler_jitter_std;
    for (int p = 0; p < num_paths(); ++p) {
        const auto& s = paths[p];
        check_range(s.amp, path_field(p, "amp"));
        check_range(s.phase, path_field(p, "phase"));
        check_range(s.delay_s, path_field(p, "delay_s"));
        check_range(s.doppler_hz, path_field(p, "doppler_hz"));
        if (s.amp.lo < 0.0) throw ValidationError(path_field(p, "amp"), "amplitude must be non-negative");
        if (s.amp_logdrift_std < 0.0)
            throw ValidationError(path_field(p, "amp_logdrift_std"), "must be non-negative");
        const double tau_lo = std::min(s.delay_s.lo, s.delay_s.lo + t_last * s.delay_slope) - tau_margin;
        const double tau_hi = std::max(s.delay_s.hi, s.delay_s.hi + t_last * s.delay_slope) + tau_margin;
        if (tau_lo < 0.0 || tau_hi >= tau_max)
            throw ValidationError(path_field(p, "delay_s"),
                                  "delay envelope leaves [0, M*delta_tau) over the pass");
        const double nu_lo = std::min(s.doppler_hz.lo, s.doppler_hz.lo + t_last * s.doppler_slope) - nu_margin;
        const double nu_hi = std::max(s.doppler_hz.hi, s.doppler_hz.hi + t_last * s.doppler_slope) + nu_margin;
        if (nu_lo <= -nu_max || nu_hi >= nu_max)
            throw ValidationError(path_field(p, "doppler_hz"),
                                  "Doppler envelope leaves (-N*delta_nu/2, N*delta_nu/2) over the pass");
    }
}

Pass generate_pass(const PassConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.rng_seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&](const Range& r) { return r.lo + (r.hi - r.lo) * uni(rng); };

    const int P = cfg.num_paths();
    struct Track {
        double amp0, phase, tau0, nu0;
        double logwalk = 0.0, jit_tau = 0.0, jit_nu = 0.0;
        bool active = true;
    };
    std::vector<Track> tr(P);
    for (int p = 0; p < P; ++p) {
        const auto& s = cfg.paths[p];
        tr[p].amp0 = draw(s.amp);
        tr[p].phase = draw(s.phase);
        tr[p].tau0 = draw(s.delay_s);
        tr[p].nu0 = draw(s.doppler_hz);
    }

    const double rho = cfg.jitter_corr;
    const double innov = std::sqrt(1.0 - rho * rho);
    // keep strictly inside the representable box even in the jitter tails
    const double tau_cap = std::nextafter(cfg.grid.max_delay(), 0.0);
    const double nu_cap = std::nextafter(cfg.grid.max_abs_doppler(), 0.0);

    Pass pass;
    pass.reserve(cfg.num_frames);
    for (int t = 0; t < cfg.num_frames; ++t) {
        ChannelSnapshot snap;
        snap.frame_index = t;
        snap.paths.reserve(P);
        for (int p = 0; p < P; ++p) {
            const auto& s = cfg.paths[p];
            auto& k = tr[p];
            if (t > 0) {
                if (s.amp_logdrift_std > 0.0)
                    k.logwalk = std::clamp(k.logwalk + s.amp_logdrift_std * normal(rng), -cfg.amp_log_bound,
                                           cfg.amp_log_bound);
                if (cfg.delay_jitter_std > 0.0)
                    k.jit_tau = rho * k.jit_tau + innov * cfg.delay_jitter_std * normal(rng);
                if (cfg.doppler_jitter_std > 0.0)
                    k.jit_nu = rho * k.jit_nu + innov * cfg.doppler_jitter_std * normal(rng);
                if (p > 0 && cfg.birth_death_prob > 0.0 && uni(rng) < cfg.birth_death_prob) k.active = !k.active;
            }
            PathState ps;
            ps.path_id = p + 1;
            ps.delay_s = std::clamp(k.tau0 + t * s.delay_slope + k.jit_tau, 0.0, tau_cap);
            ps.doppler_hz = std::clamp(k.nu0 + t * s.doppler_slope + k.jit_nu, -nu_cap, nu_cap);
            if (t > 0) k.phase = wrap_phase(k.phase + kTwoPi * ps.doppler_hz * cfg.frame_period_s + s.phase_rate);
            else k.phase = wrap_phase(k.phase);
            ps.phase = k.phase;
            ps.active = k.active;
            ps.amp = k.active ? k.amp0 * std::exp(k.logwalk) : 0.0;
            snap.paths.push_back(ps);
        }
        pass.push_back(std::move(snap));
    }
    return pass;
}

std::vector<KernelPath> snapshot_theta(const ChannelSnapshot& s) {
    std::vector<KernelPath> out;
    out.reserve(s.paths.size());
    for (const auto& p : s.paths) out.push_back(KernelPath{p.gain(), p.delay_s, p.doppler_hz});
    return out;
}

DDKernel snapshot_kernel(const ChannelSnapshot& s, const DDGrid& grid) {
    const auto th = snapshot_theta(s);
    return synthesize_kernel(th, grid);
}

DDGrid default_grid(int M, int N) {
    // 100 MHz bandwidth and 1 kHz Doppler resolution
    return DDGrid{M, N, 10e-9, 1e3};
}

std::vector<std::string> preset_names() { return {"channel1", "channel2", "channel3"}; }

PassConfig preset_pass(const std::string& name, std::uint64_t seed, int num_frames) {
    PassConfig c;
    c.name = name;
    c.grid = default_grid();
    c.num_frames = num_frames;
    c.rng_seed = seed;
    c.frame_period_s = 20e-6;
    c.jitter_corr = 0.95;
    c.amp_log_bound = 0.5;
    const double dt = c.grid.delta_tau;
    const double scale = 2000.0 / std::max(num_frames, 1);  // same total drift regardless of pass length

    auto path = [&](Range amp, Range tau_bins, Range nu_hz, double tau_slope_bins, double nu_slope, double logstd) {
        PathSpec p;
        p.amp = amp;
        p.delay_s = {tau_bins.lo * dt, tau_bins.hi * dt};
        p.doppler_hz = nu_hz;
        p.delay_slope = tau_slope_bins * dt * scale;
        p.doppler_slope = nu_slope * scale;
        p.amp_logdrift_std = logstd;
        return p;
    };

    if (name == "channel2") {
        // one dominant cluster, concentrated Doppler
        c.paths = {path({0.9, 1.0}, {2.0, 3.0}, {3000, 3400}, 0.0008, 0.15, 0.003),
                   path({0.20, 0.30}, {4.5, 5.5}, {3300, 3700}, 0.0008, 0.15, 0.004)};
        c.delay_jitter_std = 0.01 * dt;
        c.doppler_jitter_std = 5.0;
        c.birth_death_prob = 0.0;
    } else if (name == "channel1") {
        c.paths = {path({0.9, 1.0}, {2.0, 3.0}, {2800, 3300}, 0.0012, 0.3, 0.004),
                   path({0.35, 0.5}, {5.0, 6.0}, {3800, 4300}, 0.0010, 0.3, 0.006),
                   path({0.25, 0.35}, {8.0, 9.0}, {1800, 2300}, 0.0010, -0.25, 0.006)};
        c.delay_jitter_std = 0.02 * dt;
        c.doppler_jitter_std = 10.0;
        c.birth_death_prob = 0.0005;
    } else if (name == "channel3") {
        // faster Doppler drift, more clusters
        c.paths = {path({0.9, 1.0}, {1.5, 2.5}, {2500, 3000}, 0.0015, 0.9, 0.006),
                   path({0.4, 0.55}, {4.0, 5.0}, {3500, 4000}, 0.0015, 0.8, 0.008),
                   path({0.3, 0.45}, {7.0, 8.0}, {-3500, -3000}, -0.0012, -0.8, 0.008),
                   path({0.2, 0.3}, {10.0, 11.0}, {1000, 1500}, 0.0012, 0.7, 0.01),
                   path({0.15, 0.25}, {12.5, 13.0}, {-1500, -1000}, -0.001, -0.6, 0.01)};
        c.delay_jitter_std = 0.03 * dt;
        c.doppler_jitter_std = 20.0;
        c.birth_death_prob = 0.001;
    } else {
        throw ValidationError("preset", "unknown pass preset '" + name + "'");
    }
    c.validate();
    return c;
}

void write_pass(std::ostream& os, const Pass& pass) {
    os << "# afdm-isac pass trace v1\n# t path_id amp phase delay_s doppler_hz active\n";
    os << std::setprecision(17);
    for (const auto& s : pass)
        for (const auto& p : s.paths)
            os << s.frame_index << ' ' << p.path_id << ' ' << p.amp << ' ' << p.phase << ' ' << p.delay_s << ' '
               << p.doppler_hz << ' ' << (p.active ? 1 : 0) << '\n';
}

Pass read_pass(std::istream& is) {
    Pass pass;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        int t = 0, active = 0;
        PathState p;
        if (!(ls >> t >> p.path_id >> p.amp >> p.phase >> p.delay_s >> p.doppler_hz >> active))
            throw Error("pass trace: malformed row at line " + std::to_string(lineno));
        p.active = active != 0;
        if (!p.active) p.amp = 0.0;
        if (pass.empty() || pass.back().frame_index != t) {
            if (!pass.empty() && t <= pass.back().frame_index)
                throw Error("pass trace: frame index not increasing at line " + std::to_string(lineno));
            pass.push_back(ChannelSnapshot{t, {}});
        }
        pass.back().paths.push_back(p);
    }
    return pass;
}

void write_pass(const std::filesystem::path& file, const Pass& pass) {
    std::ofstream os(file);
    if (!os) throw Error("cannot open " + file.string() + " for writing");
    write_pass(os, pass);
}

Pass read_pass(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw Error("cannot open " + file.string());
    return read_pass(is);
}

}  // namespace afdmisac
