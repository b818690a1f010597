#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "afdmisac/experiment.hpp"
#include "afdmisac/svg.hpp"

namespace afdmisac {

namespace {

std::string g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void schema(std::ostream& os, const char* table) {
    os << "# afdmisac " << table << " schema " << kCsvSchemaVersion << '\n';
}

std::string slug(double v) {
    std::string s = g(v);
    for (auto& c : s)
        if (c == '.' || c == '-') c = c == '.' ? 'p' : 'm';
    return s;
}

}  // namespace

void write_stage1_csv(std::ostream& os, const std::vector<Stage1Row>& rows) {
    schema(os, "stage1");
    os << "pass,predictor,cnmse_mean,cnmse_p50,cnmse_p90,smape_amp,mae_phase_deg,n_frames\n";
    for (const auto& r : rows)
        os << r.pass << ',' << r.predictor << ',' << g(r.cnmse.mean) << ',' << g(r.cnmse.p50) << ',' << g(r.cnmse.p90)
           << ',' << g(r.smape_amp) << ',' << g(r.mae_phase) << ',' << r.cnmse.count << '\n';
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    schema(os, "sweep");
    os << "pass,ablation,snr_db,lambda,csi_mode,mse,ser,crlb_ratio,cnmse_mean,seed\n";
    for (const auto& r : rows)
        os << r.pass << ',' << r.ablation << ',' << g(r.snr_db) << ',' << g(r.lambda) << ',' << r.csi_mode << ','
           << g(r.mse) << ',' << g(r.ser) << ',' << g(r.crlb_ratio) << ',' << g(r.cnmse_mean) << ',' << r.seed << '\n';
}

std::vector<SweepRow> read_sweep_csv(std::istream& is) {
    std::vector<SweepRow> rows;
    std::string line;
    bool header = false;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line.rfind("pass,ablation,snr_db", 0) != 0) throw Error("sweep csv: unexpected header");
            header = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 10) throw Error("sweep csv: expected 10 columns at line " + std::to_string(lineno));
        try {
            SweepRow r;
            r.pass = f[0];
            r.ablation = f[1];
            r.snr_db = std::stod(f[2]);
            r.lambda = std::stod(f[3]);
            r.csi_mode = f[4];
            r.mse = std::stod(f[5]);
            r.ser = std::stod(f[6]);
            r.crlb_ratio = std::stod(f[7]);
            r.cnmse_mean = std::stod(f[8]);
            r.seed = std::stoull(f[9]);
            rows.push_back(std::move(r));
        } catch (const std::exception&) {
            throw Error("sweep csv: malformed number at line " + std::to_string(lineno));
        }
    }
    return rows;
}

void write_lambda_star_csv(std::ostream& os, const std::vector<LambdaStar>& per_pass,
                           const std::vector<LambdaStarSummary>& summary) {
    schema(os, "lambda_star");
    os << "scope,snr_db,lambda_star,lambda_iqr,g_mse,g_iqr,n\n";
    for (const auto& l : per_pass) os << l.pass << ',' << g(l.snr_db) << ',' << g(l.lambda_star) << ",," << g(l.g_mse) << ",,1\n";
    for (const auto& s : summary)
        os << "median," << g(s.snr_db) << ',' << g(s.lambda_median) << ',' << g(s.lambda_iqr) << ',' << g(s.g_median)
           << ',' << g(s.g_iqr) << ',' << s.n << '\n';
}

void write_ablation_csv(std::ostream& os, const std::vector<AblationRow>& rows) {
    schema(os, "ablation");
    os << "variant,snr_db,lambda_star_median,lambda_star_iqr,g_mse_median,g_mse_iqr,n\n";
    for (const auto& r : rows)
        os << r.variant << ',' << g(r.stats.snr_db) << ',' << g(r.stats.lambda_median) << ',' << g(r.stats.lambda_iqr)
           << ',' << g(r.stats.g_median) << ',' << g(r.stats.g_iqr) << ',' << r.stats.n << '\n';
}

void write_text_file(const std::filesystem::path& file, const std::string& content) {
    std::error_code ec;
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path(), ec);
    if (ec) throw Error("cannot create directory " + file.parent_path().string() + ": " + ec.message());
    std::ofstream os(file, std::ios::binary);
    if (!os) throw Error("cannot write " + file.string());
    os << content;
    if (!os) throw Error("write failed for " + file.string());
}

std::vector<std::filesystem::path> plot_sweep(const std::vector<SweepRow>& rows, const std::filesystem::path& dir) {
    // (ablation, pass, snr) -> mode -> rows, in first-appearance order
    std::vector<std::tuple<std::string, std::string, double>> keys;
    std::map<std::tuple<std::string, std::string, double>, std::vector<const SweepRow*>> groups;
    for (const auto& r : rows) {
        const auto k = std::make_tuple(r.ablation, r.pass, r.snr_db);
        if (!groups.count(k)) keys.push_back(k);
        groups[k].push_back(&r);
    }
    std::vector<std::filesystem::path> written;
    for (const auto& k : keys) {
        const auto& grp = groups[k];
        std::vector<std::string> modes;
        for (const auto* r : grp)
            if (std::find(modes.begin(), modes.end(), r->csi_mode) == modes.end()) modes.push_back(r->csi_mode);
        svg::Panel mse{"symbol MSE", "lambda", "MSE", false, {}};
        svg::Panel ser{"SER", "lambda", "SER", false, {}};
        svg::Panel crlb{"CRLB(lambda)/CRLB(0)", "lambda", "ratio", true, {}};
        for (const auto& m : modes) {
            svg::Series a{m, {}, {}}, b{m, {}, {}}, c{m, {}, {}};
            for (const auto* r : grp)
                if (r->csi_mode == m) {
                    a.x.push_back(r->lambda), a.y.push_back(r->mse);
                    b.x.push_back(r->lambda), b.y.push_back(r->ser);
                    c.x.push_back(r->lambda), c.y.push_back(r->crlb_ratio);
                }
            mse.series.push_back(std::move(a));
            ser.series.push_back(std::move(b));
            crlb.series.push_back(std::move(c));
        }
        const auto& [abl, pass, snr] = k;
        const std::string title = pass + ", " + g(snr) + " dB" + (abl == "baseline" ? "" : " (" + abl + ")");
        const auto file = dir / ("sweep_" + abl + "_" + pass + "_snr" + slug(snr) + ".svg");
        write_text_file(file, svg::render_panels({mse, ser, crlb}, title));
        written.push_back(file);
    }
    return written;
}

std::vector<std::filesystem::path> plot_kernels(const DDKernel& H, const DDKernel& H_hat, const std::string& tag,
                                                const std::filesystem::path& dir) {
    const std::pair<const char*, CMatrix> maps[] = {
        {"true", H.values}, {"pred", H_hat.values}, {"error", H.values - H_hat.values}};
    std::vector<std::filesystem::path> written;
    for (const auto& [name, m] : maps) {
        const auto file = dir / ("kernel_" + tag + "_" + name + ".svg");
        write_text_file(file, svg::render_heatmap(svg::magnitude_db(m), std::string("|") + name + "| (dB), " + tag));
        written.push_back(file);
    }
    return written;
}

}  // namespace afdmisac
