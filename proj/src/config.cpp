// INI-style experiment configuration.
//
// Parsing goes through boost::property_tree's INI reader; each "section.key"
// maps to a setter so unknown keys fail loudly instead of being ignored.

#include <algorithm>
#include <charconv>
#include <locale>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "afdmisac/experiment.hpp"

namespace afdmisac {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (trim(v.substr(pos)).empty()) return d;
    } catch (const std::exception&) {
    }
    throw ValidationError(key, "expected a number, got '" + v + "'");
}

long long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long i = std::stoll(v, &pos);
        if (trim(v.substr(pos)).empty()) return i;
    } catch (const std::exception&) {
    }
    throw ValidationError(key, "expected an integer, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ValidationError(key, "expected a boolean, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& s : split_list(v)) out.push_back(to_double(key, s));
    return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto num = [&](const char* k, auto member) {
            t[k] = [member](ExperimentConfig& c, const std::string& key, const std::string& v) {
                c.*member = to_double(key, v);
            };
        };
        auto integer = [&](const char* k, auto member) {
            t[k] = [member](ExperimentConfig& c, const std::string& key, const std::string& v) {
                c.*member = static_cast<std::remove_reference_t<decltype(c.*member)>>(to_int(key, v));
            };
        };
        t["meta.schema_version"] = [](ExperimentConfig&, const std::string& key, const std::string& v) {
            if (to_int(key, v) != kConfigSchemaVersion)
                throw ValidationError(key, "unsupported schema version " + v + " (expected " +
                                               std::to_string(kConfigSchemaVersion) + ")");
        };

        t["grid.M"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.grid.M = static_cast<int>(to_int(k, v)); };
        t["grid.N"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.grid.N = static_cast<int>(to_int(k, v)); };
        t["grid.delta_tau"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.grid.delta_tau = to_double(k, v); };
        t["grid.delta_nu"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.grid.delta_nu = to_double(k, v); };

        t["passes.presets"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.presets = split_list(v); };
        integer("passes.frames", &ExperimentConfig::pass_frames);

        t["tracking.K"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.track.K = static_cast<int>(to_int(k, v)); };
        t["tracking.gate"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.track.gate = to_double(k, v); };
        t["tracking.w_tau"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.track.w_tau = to_double(k, v); };
        t["tracking.w_nu"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.track.w_nu = to_double(k, v); };

        t["model.hidden"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gru.hidden = static_cast<int>(to_int(k, v)); };
        t["model.layers"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gru.layers = static_cast<int>(to_int(k, v)); };
        t["model.proj"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gru.proj = static_cast<int>(to_int(k, v)); };
        t["model.window"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gru.window = static_cast<int>(to_int(k, v)); };
        t["model.horizon"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gru.horizon = static_cast<int>(to_int(k, v)); };
        t["model.residual"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gru.residual = to_bool(k, v); };
        num("model.a_min", &ExperimentConfig::a_min);

        t["train.batch"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.batch = static_cast<int>(to_int(k, v)); };
        t["train.lr"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.lr = to_double(k, v); };
        t["train.weight_decay"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.weight_decay = to_double(k, v); };
        t["train.epochs"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.epochs = static_cast<int>(to_int(k, v)); };
        t["train.schedule_steps"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.schedule_steps = to_int(k, v); };
        t["train.clip_norm"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.clip_norm = to_double(k, v); };
        t["train.patience"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.patience = static_cast<int>(to_int(k, v)); };
        t["train.train_frac"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.train_frac = to_double(k, v); };
        t["train.val_frac"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.val_frac = to_double(k, v); };
        t["train.guard"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.guard = static_cast<int>(to_int(k, v)); };
        t["train.max_train_windows"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.max_train_windows = static_cast<int>(to_int(k, v)); };
        t["train.max_val_windows"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.max_val_windows = static_cast<int>(to_int(k, v)); };

        t["loss.w_A"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.loss.w_A = to_double(k, v); };
        t["loss.w_theta"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.loss.w_theta = to_double(k, v); };
        t["loss.w_tau"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.loss.w_tau = to_double(k, v); };
        t["loss.w_nu"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.loss.w_nu = to_double(k, v); };
        t["loss.w_uc"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.loss.w_uc = to_double(k, v); };
        t["loss.w_c"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.loss.w_c = to_double(k, v); };

        t["stage2.snr_db"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.snr_db = to_doubles(k, v); };
        t["stage2.lambdas"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.lambdas = to_doubles(k, v); };
        t["stage2.csi_modes"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
            c.csi_modes.clear();
            for (const auto& s : split_list(v)) c.csi_modes.push_back(parse_csi_mode(s));
        };
        integer("stage2.outdated_lag", &ExperimentConfig::outdated_lag);
        integer("stage2.eval_frames", &ExperimentConfig::eval_frames);
        integer("stage2.mc_frames", &ExperimentConfig::mc_frames);
        integer("stage2.k_prime", &ExperimentConfig::k_prime);
        num("stage2.eta_floor", &ExperimentConfig::eta_floor);
        t["stage2.modulation"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            if (v == "qpsk") c.modulation = Modulation::qpsk;
            else if (v == "qam16" || v == "16qam") c.modulation = Modulation::qam16;
            else throw ValidationError(k, "expected qpsk or qam16");
        };
        num("stage2.Es", &ExperimentConfig::Es);
        num("stage2.denom_floor", &ExperimentConfig::denom_floor);

        t["ablation.variants"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
            c.ablations.clear();
            for (const auto& s : split_list(v)) c.ablations.push_back(parse_ablation(s));
        };
        integer("ablation.sf_random_seed", &ExperimentConfig::sf_random_seed);

        integer("run.seed", &ExperimentConfig::seed);
        integer("run.threads", &ExperimentConfig::threads);
        t["run.out_dir"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.out_dir = v; };
        return t;
    }();
    return table;
}

// Writes doubles in the shortest form that reads back exactly, so a dumped
// config shows 0.6 rather than 0.59999999999999998.
class ShortestDouble : public std::num_put<char> {
protected:
    iter_type do_put(iter_type out, std::ios_base&, char_type, double v) const override {
        char buf[32];
        auto r = std::to_chars(buf, buf + sizeof buf, v);
        return std::copy(buf, r.ptr, out);
    }
};

void use_shortest(std::ostream& os) { os.imbue(std::locale(os.getloc(), new ShortestDouble)); }

template <class T>
std::string join(const std::vector<T>& v) {
    std::ostringstream os;
    use_shortest(os);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ',';
        if constexpr (std::is_same_v<T, CsiMode> || std::is_same_v<T, Ablation>)
            os << to_string(v[i]);
        else
            os << v[i];
    }
    return os.str();
}

}  // namespace

std::string to_string(CsiMode m) {
    switch (m) {
        case CsiMode::predicted: return "predicted";
        case CsiMode::outdated: return "outdated";
        case CsiMode::true_reference: return "true";
    }
    return "?";
}

std::string to_string(Ablation a) {
    switch (a) {
        case Ablation::none: return "baseline";
        case Ablation::sf_const: return "SfConst";
        case Ablation::sf_random: return "SfRandom";
        case Ablation::no_norm: return "noNorm";
    }
    return "?";
}

CsiMode parse_csi_mode(const std::string& s) {
    if (s == "predicted") return CsiMode::predicted;
    if (s == "outdated") return CsiMode::outdated;
    if (s == "true" || s == "true_reference") return CsiMode::true_reference;
    throw ValidationError("csi_modes", "unknown CSI mode '" + s + "'");
}

Ablation parse_ablation(const std::string& s) {
    if (s == "none" || s == "baseline") return Ablation::none;
    if (s == "SfConst" || s == "sf_const") return Ablation::sf_const;
    if (s == "SfRandom" || s == "sf_random") return Ablation::sf_random;
    if (s == "noNorm" || s == "no_norm") return Ablation::no_norm;
    throw ValidationError("ablation", "unknown ablation '" + s + "'");
}

void ExperimentConfig::validate() const {
    grid.validate();
    if (presets.empty()) throw ValidationError("passes.presets", "need at least one pass preset");
    for (const auto& p : presets) preset_pass(p, 1, std::max(pass_frames, 1));  // throws on unknown names
    if (pass_frames < 1) throw ValidationError("passes.frames", "must be positive");
    track.validate();
    gru.validate();
    if (gru.input_dim != 5 * track.K) throw ValidationError("tracking.K", "model input must be 5K");
    train.validate(gru.window);
    loss.validate();
    if (!(a_min > 0.0)) throw ValidationError("model.a_min", "must be positive");
    if (snr_db.empty()) throw ValidationError("stage2.snr_db", "SNR list is empty");
    if (lambdas.empty() || std::find(lambdas.begin(), lambdas.end(), 0.0) == lambdas.end())
        throw ValidationError("stage2.lambdas", "lambda grid must contain 0");
    for (double l : lambdas)
        if (!(l >= 0.0)) throw ValidationError("stage2.lambdas", "values must be non-negative");
    if (csi_modes.empty()) throw ValidationError("stage2.csi_modes", "need at least one CSI mode");
    if (outdated_lag < 1) throw ValidationError("stage2.outdated_lag", "must be at least 1 frame");
    if (eval_frames < 1) throw ValidationError("stage2.eval_frames", "must be positive");
    if (mc_frames < 1) throw ValidationError("stage2.mc_frames", "must be positive");
    if (k_prime < 1) throw ValidationError("stage2.k_prime", "must be positive");
    if (!(eta_floor >= 0.0 && eta_floor < 1.0)) throw ValidationError("stage2.eta_floor", "must lie in [0, 1)");
    if (!(Es > 0.0)) throw ValidationError("stage2.Es", "must be positive");
    if (threads < 1) throw ValidationError("run.threads", "must be positive");
}

ExperimentConfig parse_config(std::istream& is) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(std::string("config: ") + e.what());
    }
    ExperimentConfig c;
    bool grid_scales_set = false;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ValidationError(section, "key outside of a [section]");
        for (const auto& [key, val] : body) {
            const std::string full = section + "." + key;
            if (full == "tracking.tau_scale" || full == "tracking.nu_scale") {
                (key == "tau_scale" ? c.track.tau_scale : c.track.nu_scale) = to_double(full, trim(val.data()));
                grid_scales_set = true;
                continue;
            }
            const auto it = setters().find(full);
            if (it == setters().end()) throw ValidationError(full, "unknown configuration key");
            it->second(c, full, trim(val.data()));
        }
    }
    if (!grid_scales_set) {
        c.track.tau_scale = c.grid.delta_tau;
        c.track.nu_scale = c.grid.delta_nu;
    }
    c.gru.input_dim = 5 * c.track.K;
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw Error("cannot open config " + file.string());
    return parse_config(is);
}

void write_config(std::ostream& os, const ExperimentConfig& c) {
    const std::locale saved = os.getloc();
    use_shortest(os);
    os << "[meta]\nschema_version = " << kConfigSchemaVersion << "\n\n";
    os << "[grid]\nM = " << c.grid.M << "\nN = " << c.grid.N << "\ndelta_tau = " << c.grid.delta_tau
       << "\ndelta_nu = " << c.grid.delta_nu << "\n\n";
    os << "[passes]\npresets = " << join(c.presets) << "\nframes = " << c.pass_frames << "\n\n";
    os << "[tracking]\nK = " << c.track.K << "\ngate = " << c.track.gate << "\nw_tau = " << c.track.w_tau
       << "\nw_nu = " << c.track.w_nu << "\ntau_scale = " << c.track.tau_scale << "\nnu_scale = " << c.track.nu_scale
       << "\n\n";
    os << "[model]\nhidden = " << c.gru.hidden << "\nlayers = " << c.gru.layers << "\nproj = " << c.gru.proj
       << "\nwindow = " << c.gru.window << "\nhorizon = " << c.gru.horizon
       << "\nresidual = " << (c.gru.residual ? "true" : "false") << "\na_min = " << c.a_min << "\n\n";
    os << "[train]\nbatch = " << c.train.batch << "\nlr = " << c.train.lr << "\nweight_decay = " << c.train.weight_decay
       << "\nepochs = " << c.train.epochs << "\nschedule_steps = " << c.train.schedule_steps
       << "\nclip_norm = " << c.train.clip_norm << "\npatience = " << c.train.patience
       << "\ntrain_frac = " << c.train.train_frac << "\nval_frac = " << c.train.val_frac << "\nguard = " << c.train.guard
       << "\nmax_train_windows = " << c.train.max_train_windows << "\nmax_val_windows = " << c.train.max_val_windows
       << "\n\n";
    os << "[loss]\nw_A = " << c.loss.w_A << "\nw_theta = " << c.loss.w_theta << "\nw_tau = " << c.loss.w_tau
       << "\nw_nu = " << c.loss.w_nu << "\nw_uc = " << c.loss.w_uc << "\nw_c = " << c.loss.w_c << "\n\n";
    os << "[stage2]\nsnr_db = " << join(c.snr_db) << "\nlambdas = " << join(c.lambdas)
       << "\ncsi_modes = " << join(c.csi_modes) << "\noutdated_lag = " << c.outdated_lag
       << "\neval_frames = " << c.eval_frames << "\nmc_frames = " << c.mc_frames << "\nk_prime = " << c.k_prime
       << "\neta_floor = " << c.eta_floor << "\nmodulation = " << (c.modulation == Modulation::qpsk ? "qpsk" : "qam16")
       << "\nEs = " << c.Es << "\ndenom_floor = " << c.denom_floor << "\n\n";
    os << "[ablation]\nvariants = " << join(c.ablations) << "\nsf_random_seed = " << c.sf_random_seed << "\n\n";
    os << "[run]\nseed = " << c.seed << "\nthreads = " << c.threads << "\nout_dir = " << c.out_dir.string() << "\n";
    os.imbue(saved);
}

}  // namespace afdmisac
