#pragma once

// Flat-file emission: CSV tables, JSON summaries and static SVG plots.
// All writers are deterministic: fixed column order, shortest round-trip
// float formatting, no timestamps inside data files.

#include <string>
#include <vector>

#include "torstab/stability.hpp"

namespace torstab {

// Shortest decimal string that round-trips the double.
std::string format_double(double v);

struct CsvColumn {
    std::string name;
    std::vector<double> values;
};

// Writes "# key=value" header lines, then the column header and rows.
void write_csv(const std::string& path, const std::vector<std::pair<std::string, std::string>>& meta,
               const std::vector<CsvColumn>& columns);

void write_text_file(const std::string& path, const std::string& content);

struct SvgSeries {
    std::string label;
    std::string color = "#1f6fb2";
    std::vector<double> x, y;
    std::vector<double> yerr;  // empty = no error bars
    bool dashed = false;
};

// Line plot with optional error bars; fixed 840x520 canvas.
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series,
                    const std::vector<std::pair<std::string, std::string>>& meta = {});

}  // namespace torstab
