#include "afdmisac/path_tracking.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace afdmisac {

void TrackConfig::validate() const {
    if (K < 1) throw ValidationError("K", "need at least one slot");
    if (w_tau < 0.0 || w_nu < 0.0) throw ValidationError("w_tau/w_nu", "weights must be non-negative");
    if (!(w_tau + w_nu > 0.0)) throw ValidationError("w_tau/w_nu", "at least one weight must be positive");
    if (!(gate > 0.0)) throw ValidationError("gate", "must be positive");
    if (!(tau_scale > 0.0)) throw ValidationError("tau_scale", "must be positive");
    if (!(nu_scale > 0.0)) throw ValidationError("nu_scale", "must be positive");
}

TrackConfig TrackConfig::for_grid(const DDGrid& g, int K) {
    TrackConfig c;
    c.K = K;
    c.tau_scale = g.delta_tau;
    c.nu_scale = g.delta_nu;
    return c;
}

SlotFrame select_topk(const ChannelSnapshot& s, int K) {
    if (K < 1) throw ValidationError("K", "need at least one slot");
    std::vector<const PathState*> act;
    for (const auto& p : s.paths)
        if (p.active && p.amp > 0.0) act.push_back(&p);
    std::sort(act.begin(), act.end(), [](const PathState* a, const PathState* b) {
        if (a->amp != b->amp) return a->amp > b->amp;
        if (a->delay_s != b->delay_s) return a->delay_s < b->delay_s;
        return a->path_id < b->path_id;
    });
    SlotFrame out(K);
    for (int k = 0; k < K && k < static_cast<int>(act.size()); ++k) {
        const auto* p = act[k];
        out[k] = SlotState{p->amp, p->phase, p->delay_s, p->doppler_hz, p->path_id, true};
    }
    return out;
}

double match_cost(const SlotState& a, const SlotState& b, const TrackConfig& cfg) {
    return cfg.w_tau * std::abs(a.delay_s - b.delay_s) / cfg.tau_scale +
           cfg.w_nu * std::abs(a.doppler_hz - b.doppler_hz) / cfg.nu_scale;
}

std::vector<int> hungarian(const RMatrix& cost) {
    // Shortest augmenting path with potentials (Kuhn-Munkres), 1-based internals.
    const int n = static_cast<int>(cost.rows());
    if (cost.cols() != n) throw ValidationError("cost", "hungarian expects a square matrix");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j]) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

Assignment match_paths(const SlotFrame& prev, const SlotFrame& curr, const TrackConfig& cfg) {
    cfg.validate();
    if (prev.size() != curr.size()) throw ValidationError("curr", "prev and curr must both hold K entries");
    const int K = static_cast<int>(prev.size());
    // Inadmissible pairs cost more than any complete admissible matching.
    const double big = (K + 1.0) * (cfg.gate + 1.0);
    RMatrix c(K, K);
    std::vector<std::vector<char>> ok(K, std::vector<char>(K, 0));
    for (int i = 0; i < K; ++i) {
        for (int j = 0; j < K; ++j) {
            const double d = match_cost(prev[i], curr[j], cfg);
            const bool admissible = curr[j].amp > 0.0 && std::isfinite(d) && d <= cfg.gate;
            ok[i][j] = admissible;
            c(i, j) = admissible ? d : big;
        }
    }
    const auto r2c = hungarian(c);
    Assignment a;
    a.prev_to_curr.assign(K, -1);
    a.curr_to_prev.assign(K, -1);
    for (int i = 0; i < K; ++i) {
        const int j = r2c[i];
        if (j >= 0 && ok[i][j]) {
            a.prev_to_curr[i] = j;
            a.curr_to_prev[j] = i;
            a.total_cost += c(i, j);
        }
    }
    return a;
}

TrackedSequence track_pass(const Pass& pass, const TrackConfig& cfg) {
    cfg.validate();
    const int K = cfg.K;
    TrackedSequence seq;
    seq.K = K;
    seq.frames.reserve(pass.size());
    std::vector<char> initialized(K, 0);
    SlotFrame slots(K);
    for (std::size_t t = 0; t < pass.size(); ++t) {
        const SlotFrame curr = select_topk(pass[t], K);
        SlotFrame next(K);
        std::vector<char> taken(K, 0);
        if (t == 0) {
            for (int k = 0; k < K; ++k) {
                if (curr[k].matched) {
                    next[k] = curr[k];
                    taken[k] = 1;
                }
            }
        } else {
            SlotFrame prev = slots;
            for (int k = 0; k < K; ++k)
                if (!initialized[k]) prev[k].delay_s = std::numeric_limits<double>::quiet_NaN();
            const Assignment a = match_paths(prev, curr, cfg);
            for (int i = 0; i < K; ++i) {
                if (a.prev_to_curr[i] >= 0) {
                    next[i] = curr[a.prev_to_curr[i]];
                    taken[i] = 1;
                }
            }
            // unmatched current paths open free slots
            for (int j = 0; j < K; ++j) {
                if (!curr[j].matched || a.curr_to_prev[j] >= 0) continue;
                for (int k = 0; k < K; ++k) {
                    if (!taken[k]) {
                        next[k] = curr[j];
                        taken[k] = 1;
                        break;
                    }
                }
            }
        }
        for (int k = 0; k < K; ++k) {
            if (taken[k]) {
                initialized[k] = 1;
                continue;
            }
            // placeholder: zero amplitude, parameters held from the slot's last state
            next[k] = slots[k];
            next[k].amp = 0.0;
            next[k].matched = false;
            next[k].path_id = 0;
        }
        slots = next;
        seq.frames.push_back(next);
    }
    return seq;
}

void write_tracked(std::ostream& os, const TrackedSequence& seq) {
    os << "# afdm-isac tracked sequence v1\n# t slot amp phase delay_s doppler_hz active\n";
    os << std::setprecision(17);
    for (std::size_t t = 0; t < seq.frames.size(); ++t)
        for (int k = 0; k < seq.K; ++k) {
            const auto& s = seq.frames[t][k];
            os << t << ' ' << k << ' ' << s.amp << ' ' << s.phase << ' ' << s.delay_s << ' ' << s.doppler_hz
               << ' ' << (s.matched ? 1 : 0) << '\n';
        }
}

TrackedSequence read_tracked(std::istream& is) {
    TrackedSequence seq;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::size_t t = 0;
        int k = 0, active = 0;
        SlotState s;
        if (!(ls >> t >> k >> s.amp >> s.phase >> s.delay_s >> s.doppler_hz >> active))
            throw Error("tracked sequence: malformed row at line " + std::to_string(lineno));
        s.matched = active != 0;
        if (t >= seq.frames.size()) seq.frames.resize(t + 1);
        auto& f = seq.frames[t];
        if (k >= static_cast<int>(f.size())) f.resize(k + 1);
        f[k] = s;
        seq.K = std::max(seq.K, k + 1);
    }
    for (auto& f : seq.frames) f.resize(seq.K);
    return seq;
}

}  // namespace afdmisac
