#include "torstab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace torstab {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // LF line endings everywhere
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    return out;
}

}  // namespace

void write_csv(const std::string& path, const std::vector<std::pair<std::string, std::string>>& meta,
               const std::vector<CsvColumn>& columns) {
    auto out = open_out(path);
    for (const auto& [k, v] : meta) out << "# " << k << "=" << v << "\n";
    for (size_t c = 0; c < columns.size(); ++c)
        out << columns[c].name << (c + 1 < columns.size() ? "," : "\n");
    size_t rows = columns.empty() ? 0 : columns[0].values.size();
    for (const auto& col : columns)
        if (col.values.size() != rows)
            throw std::invalid_argument("write_csv: ragged columns in " + path);
    for (size_t rw = 0; rw < rows; ++rw)
        for (size_t c = 0; c < columns.size(); ++c)
            out << format_double(columns[c].values[rw]) << (c + 1 < columns.size() ? "," : "\n");
}

void write_text_file(const std::string& path, const std::string& content) {
    auto out = open_out(path);
    out << content;
}

namespace {

struct Axis {
    double lo = 0.0, hi = 1.0;

    void expand(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    // Round out to a tick-friendly range.
    void finish() {
        if (hi <= lo) hi = lo + 1.0;
        double span = hi - lo;
        lo -= 0.05 * span;
        hi += 0.05 * span;
    }
};

double nice_step(double span, int target_ticks) {
    double raw = span / target_ticks;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag) return m * mag;
    return 10.0 * mag;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series,
                    const std::vector<std::pair<std::string, std::string>>& meta) {
    const double W = 840, H = 520;
    const double ml = 70, mr = 200, mt = 40, mb = 55;  // room for a legend at the right

    Axis ax, ay;
    bool any = false;
    for (const auto& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!any) {
                ax.lo = ax.hi = s.x[i];
                ay.lo = ay.hi = s.y[i];
                any = true;
            }
            ax.expand(s.x[i]);
            double e = i < s.yerr.size() ? s.yerr[i] : 0.0;
            ay.expand(s.y[i] - e);
            ay.expand(s.y[i] + e);
        }
    ax.finish();
    ay.finish();

    auto px = [&](double x) { return ml + (x - ax.lo) / (ax.hi - ax.lo) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - ay.lo) / (ay.hi - ay.lo) * (H - mt - mb); };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    for (const auto& [k, v] : meta) svg << "<!-- " << k << "=" << v << " -->\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << (ml + (W - ml - mr) / 2) << "\" y=\"22\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"15\">"
        << title << "</text>\n";

    // axes
    svg << "<g stroke=\"#333\" stroke-width=\"1\">\n"
        << "<line x1=\"" << ml << "\" y1=\"" << (H - mb) << "\" x2=\"" << (W - mr) << "\" y2=\""
        << (H - mb) << "\"/>\n"
        << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << (H - mb)
        << "\"/>\n</g>\n";

    svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    double xs = nice_step(ax.hi - ax.lo, 6);
    for (double v = std::ceil(ax.lo / xs) * xs; v <= ax.hi + 1e-12; v += xs) {
        svg << "<line x1=\"" << px(v) << "\" y1=\"" << (H - mb) << "\" x2=\"" << px(v) << "\" y2=\""
            << (H - mb + 5) << "\" stroke=\"#333\"/>\n"
            << "<text x=\"" << px(v) << "\" y=\"" << (H - mb + 18)
            << "\" text-anchor=\"middle\">" << tick_label(v) << "</text>\n";
    }
    double ys = nice_step(ay.hi - ay.lo, 6);
    for (double v = std::ceil(ay.lo / ys) * ys; v <= ay.hi + 1e-12; v += ys) {
        svg << "<line x1=\"" << (ml - 5) << "\" y1=\"" << py(v) << "\" x2=\"" << ml << "\" y2=\""
            << py(v) << "\" stroke=\"#333\"/>\n"
            << "<text x=\"" << (ml - 8) << "\" y=\"" << (py(v) + 4)
            << "\" text-anchor=\"end\">" << tick_label(v) << "</text>\n";
    }
    svg << "<text x=\"" << (ml + (W - ml - mr) / 2) << "\" y=\"" << (H - 12)
        << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n"
        << "<text x=\"18\" y=\"" << (mt + (H - mt - mb) / 2)
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
        << (mt + (H - mt - mb) / 2) << ")\">" << y_label << "</text>\n</g>\n";

    int li = 0;
    for (const auto& s : series) {
        if (!s.yerr.empty()) {
            svg << "<g stroke=\"" << s.color << "\" stroke-width=\"1\" opacity=\"0.7\">\n";
            for (size_t i = 0; i < s.x.size() && i < s.yerr.size(); ++i) {
                if (s.yerr[i] <= 0) continue;
                double x = px(s.x[i]);
                svg << "<line x1=\"" << x << "\" y1=\"" << py(s.y[i] - s.yerr[i]) << "\" x2=\""
                    << x << "\" y2=\"" << py(s.y[i] + s.yerr[i]) << "\"/>\n";
            }
            svg << "</g>\n";
        }
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.6\"";
        if (s.dashed) svg << " stroke-dasharray=\"6 4\"";
        svg << " points=\"";
        for (size_t i = 0; i < s.x.size(); ++i)
            svg << px(s.x[i]) << "," << py(s.y[i]) << (i + 1 < s.x.size() ? " " : "");
        svg << "\"/>\n";
        double lx = W - mr + 14, ly = mt + 14 + 18 * li;
        svg << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << (lx + 22) << "\" y2=\""
            << ly << "\" stroke=\"" << s.color << "\" stroke-width=\"1.6\""
            << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n"
            << "<text x=\"" << (lx + 28) << "\" y=\"" << (ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
        ++li;
    }
    svg << "</svg>\n";
    write_text_file(path, svg.str());
}

}  // namespace torstab
