// path_tracking.hpp - top-K dominant path selection and gated identity tracking.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "afdmisac/channel_model.hpp"

namespace afdmisac {

struct TrackConfig {
    int K = 3;
    double w_tau = 1.0;
    double w_nu = 1.0;
    double gate = 2.0;         // in normalized (bin) units
    double tau_scale = 10e-9;  // defaults to grid delta_tau
    double nu_scale = 1e3;     // defaults to grid delta_nu

    void validate() const;
    static TrackConfig for_grid(const DDGrid& g, int K = 3);
};

/// One slot entry. `matched` is false for zero-amplitude placeholders.
struct SlotState {
    double amp = 0.0;
    double phase = 0.0;
    double delay_s = 0.0;
    double doppler_hz = 0.0;
    int path_id = 0;  // source path id (0 for placeholders); not used by the predictor
    bool matched = false;

    cd gain() const { return std::polar(amp, phase); }
};

using SlotFrame = std::vector<SlotState>;  // length K

struct TrackedSequence {
    int K = 0;
    std::vector<SlotFrame> frames;
};

/// K strongest active paths by |h|; ties by smaller delay, then smaller path id.
/// Missing slots are zero placeholders.
SlotFrame select_topk(const ChannelSnapshot& s, int K);

struct Assignment {
    std::vector<int> prev_to_curr;  // -1 = unmatched
    std::vector<int> curr_to_prev;  // -1 = unmatched
    double total_cost = 0.0;        // sum over matched pairs
};

/// Weighted normalized delay-Doppler distance.
double match_cost(const SlotState& a, const SlotState& b, const TrackConfig& cfg);

/// Gated one-to-one assignment (Hungarian). Placeholder entries in `curr` are never matched.
/// Maximizes the number of admissible pairs (cost <= gate) and, among those, minimizes total cost.
Assignment match_paths(const SlotFrame& prev, const SlotFrame& curr, const TrackConfig& cfg);

/// Minimum-cost assignment for a square cost matrix (row i -> column result[i]).
std::vector<int> hungarian(const RMatrix& cost);

/// Folds select_topk + match_paths over a pass. Unmatched slots keep their last
/// delay/Doppler/phase with zero amplitude so that reappearing paths can reclaim them.
TrackedSequence track_pass(const Pass& pass, const TrackConfig& cfg);

// Same table layout as the pass trace, with the slot index in place of path_id.
void write_tracked(std::ostream& os, const TrackedSequence& seq);
TrackedSequence read_tracked(std::istream& is);

}  // namespace afdmisac
