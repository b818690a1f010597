#include "afdmisac/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace afdmisac::svg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string esc(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
            case '&': o += "&amp;"; break;
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            case '"': o += "&quot;"; break;
            default: o += c;
        }
    }
    return o;
}

// Viridis-like ramp through five stops.
std::string ramp(double u) {
    static constexpr double stops[5][3] = {
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    u = std::clamp(u, 0.0, 1.0) * 4.0;
    const int i = std::min(3, static_cast<int>(u));
    const double f = u - i;
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(stops[i][0] + f * (stops[i + 1][0] - stops[i][0])),
                  static_cast<int>(stops[i][1] + f * (stops[i + 1][1] - stops[i][1])),
                  static_cast<int>(stops[i][2] + f * (stops[i + 1][2] - stops[i][2])));
    return buf;
}

void panel(std::ostringstream& os, const Panel& p, double ox, double oy, double w, double h) {
    const double ml = 60, mr = 10, mt = 28, mb = 42;
    const double pw = w - ml - mr, ph = h - mt - mb;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : p.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            double y = s.y[i];
            if (p.log_y) {
                if (!(y > 0.0)) continue;
                y = std::log10(y);
            }
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (!(x1 >= x0)) x0 = 0, x1 = 1;
    if (!(y1 >= y0)) y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto X = [&](double x) { return ox + ml + (x - x0) / (x1 - x0) * pw; };
    auto Y = [&](double y) { return oy + mt + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    os << "<rect x=\"" << num(ox + ml) << "\" y=\"" << num(oy + mt) << "\" width=\"" << num(pw) << "\" height=\""
       << num(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";
    os << "<text x=\"" << num(ox + ml + pw / 2) << "\" y=\"" << num(oy + 18)
       << "\" text-anchor=\"middle\" font-size=\"13\">" << esc(p.title) << "</text>\n";
    os << "<text x=\"" << num(ox + ml + pw / 2) << "\" y=\"" << num(oy + h - 6)
       << "\" text-anchor=\"middle\" font-size=\"11\">" << esc(p.xlabel) << "</text>\n";
    os << "<text transform=\"translate(" << num(ox + 14) << "," << num(oy + mt + ph / 2)
       << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"11\">" << esc(p.ylabel) << "</text>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
        os << "<text x=\"" << num(X(xv)) << "\" y=\"" << num(oy + mt + ph + 14)
           << "\" text-anchor=\"middle\" font-size=\"9\">" << num(xv) << "</text>\n";
        os << "<text x=\"" << num(ox + ml - 4) << "\" y=\"" << num(Y(yv) + 3)
           << "\" text-anchor=\"end\" font-size=\"9\">" << (p.log_y ? num(std::pow(10.0, yv)) : num(yv)) << "</text>\n";
    }
    for (std::size_t si = 0; si < p.series.size(); ++si) {
        const auto& s = p.series[si];
        const char* col = kPalette[si % std::size(kPalette)];
        std::ostringstream pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            double y = s.y[i];
            if (p.log_y) {
                if (!(y > 0.0)) continue;
                y = std::log10(y);
            }
            pts << num(X(s.x[i])) << ',' << num(Y(y)) << ' ';
            os << "<circle cx=\"" << num(X(s.x[i])) << "\" cy=\"" << num(Y(y)) << "\" r=\"2.5\" fill=\"" << col << "\"/>\n";
        }
        os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"" << pts.str() << "\"/>\n";
        os << "<text x=\"" << num(ox + ml + pw - 4) << "\" y=\"" << num(oy + mt + 14 + 13 * si)
           << "\" text-anchor=\"end\" font-size=\"10\" fill=\"" << col << "\">" << esc(s.label) << "</text>\n";
    }
}

}  // namespace

std::string render_panels(const std::vector<Panel>& panels, const std::string& title) {
    const double w = 320, h = 260, top = 24;
    std::ostringstream os;
    const double W = w * std::max<std::size_t>(1, panels.size());
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(W) << "\" height=\"" << num(h + top)
       << "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(W / 2) << "\" y=\"16\" text-anchor=\"middle\" font-size=\"14\">" << esc(title)
       << "</text>\n";
    for (std::size_t i = 0; i < panels.size(); ++i) panel(os, panels[i], w * i, top, w, h);
    os << "</svg>\n";
    return os.str();
}

RMatrix magnitude_db(const CMatrix& a, double floor_db) {
    RMatrix out(a.rows(), a.cols());
    const double mx = a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double m = std::abs(a.data()[i]);
        out.data()[i] = (mx > 0.0 && m > 0.0) ? std::max(floor_db, 20.0 * std::log10(m / mx)) : floor_db;
    }
    return out;
}

std::string render_heatmap(const RMatrix& db, const std::string& title, double lo, double hi) {
    const double cell = 16, ml = 40, mt = 30, legend = 60;
    const double W = ml + cell * db.cols() + legend, H = mt + cell * db.rows() + 30;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(W) << "\" height=\"" << num(H)
       << "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(W / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << esc(title)
       << "</text>\n";
    for (Eigen::Index r = 0; r < db.rows(); ++r)
        for (Eigen::Index c = 0; c < db.cols(); ++c)
            os << "<rect x=\"" << num(ml + cell * c) << "\" y=\"" << num(mt + cell * r) << "\" width=\"" << num(cell)
               << "\" height=\"" << num(cell) << "\" fill=\"" << ramp((db(r, c) - lo) / (hi - lo)) << "\"/>\n";
    os << "<text x=\"" << num(ml + cell * db.cols() / 2) << "\" y=\"" << num(H - 8)
       << "\" text-anchor=\"middle\" font-size=\"11\">Doppler bin</text>\n";
    os << "<text transform=\"translate(14," << num(mt + cell * db.rows() / 2)
       << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"11\">delay bin</text>\n";
    const double lx = ml + cell * db.cols() + 12, lh = cell * db.rows();
    for (int i = 0; i < 20; ++i)
        os << "<rect x=\"" << num(lx) << "\" y=\"" << num(mt + lh * i / 20.0) << "\" width=\"12\" height=\""
           << num(lh / 20.0 + 0.5) << "\" fill=\"" << ramp(1.0 - (i + 0.5) / 20.0) << "\"/>\n";
    os << "<text x=\"" << num(lx + 16) << "\" y=\"" << num(mt + 8) << "\" font-size=\"9\">" << num(hi) << " dB</text>\n";
    os << "<text x=\"" << num(lx + 16) << "\" y=\"" << num(mt + lh) << "\" font-size=\"9\">" << num(lo) << " dB</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace afdmisac::svg
