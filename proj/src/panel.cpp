#include "shockpanel/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "shockpanel/errors.hpp"

namespace shockpanel {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim_cr(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
    return s;
}

}  // namespace

PanelDataset PanelDataset::build(const std::vector<std::string>& series_names,
                                 const std::vector<std::string>& units,
                                 const std::vector<int>& years,
                                 const std::vector<std::vector<double>>& row_values) {
    PanelDataset panel;
    panel.series_names_ = series_names;
    for (std::size_t j = 0; j < series_names.size(); ++j)
        panel.series_index_[series_names[j]] = static_cast<int>(j);

    // Collect per-unit year sets, preserving first-appearance unit order.
    std::map<std::string, int> unit_idx;
    std::vector<std::set<int>> unit_years;
    for (std::size_t r = 0; r < units.size(); ++r) {
        auto [it, inserted] = unit_idx.try_emplace(units[r], static_cast<int>(panel.units_.size()));
        if (inserted) {
            panel.units_.push_back(units[r]);
            unit_years.emplace_back();
        }
        if (!unit_years[it->second].insert(years[r]).second)
            throw Error(Errc::DuplicateKey,
                        "repeated (unit, year) = (" + units[r] + ", " + std::to_string(years[r]) + ")");
    }

    panel.first_year_.resize(panel.units_.size());
    panel.last_year_.resize(panel.units_.size());
    panel.offsets_.resize(panel.units_.size() + 1, 0);
    for (std::size_t u = 0; u < panel.units_.size(); ++u) {
        const auto& ys = unit_years[u];
        int lo = *ys.begin(), hi = *ys.rbegin();
        if (static_cast<int>(ys.size()) != hi - lo + 1) {
            int expect = lo;
            for (int y : ys) {
                if (y != expect) break;
                ++expect;
            }
            throw Error(Errc::GapInPanel, "unit " + panel.units_[u] + " missing year " +
                                              std::to_string(expect));
        }
        panel.first_year_[u] = lo;
        panel.last_year_[u] = hi;
        panel.offsets_[u + 1] = panel.offsets_[u] + static_cast<std::size_t>(hi - lo + 1);
    }

    panel.data_.assign(series_names.size(),
                       std::vector<double>(panel.offsets_.back(), kMissing));
    for (std::size_t r = 0; r < units.size(); ++r) {
        int u = unit_idx[units[r]];
        std::size_t c = panel.cell(u, years[r]);
        for (std::size_t j = 0; j < series_names.size(); ++j)
            panel.data_[j][c] = row_values[r][j];
    }
    return panel;
}

std::size_t PanelDataset::cell(int unit, int year) const {
    return offsets_[unit] + static_cast<std::size_t>(year - first_year_[unit]);
}

int PanelDataset::unit_index(const std::string& unit) const {
    for (std::size_t u = 0; u < units_.size(); ++u)
        if (units_[u] == unit) return static_cast<int>(u);
    return -1;
}

bool PanelDataset::has_series(const std::string& name) const {
    return series_index_.count(name) > 0;
}

double PanelDataset::value(int unit, int year, const std::string& series) const {
    auto it = series_index_.find(series);
    if (it == series_index_.end()) throw Error(Errc::UnknownSeries, series);
    if (year < first_year_[unit] || year > last_year_[unit]) return kMissing;
    return data_[it->second][cell(unit, year)];
}

SeriesView PanelDataset::series(int unit, const std::string& name) const {
    auto it = series_index_.find(name);
    if (it == series_index_.end()) throw Error(Errc::UnknownSeries, name);
    SeriesView view;
    view.unit = units_[unit];
    int lo = first_year_[unit], hi = last_year_[unit];
    view.years.reserve(static_cast<std::size_t>(hi - lo + 1));
    view.values.reserve(view.years.capacity());
    for (int y = lo; y <= hi; ++y) {
        view.years.push_back(y);
        view.values.push_back(data_[it->second][cell(unit, y)]);
    }
    return view;
}

SeriesView PanelDataset::series(const std::string& unit, const std::string& name) const {
    int u = unit_index(unit);
    if (u < 0) throw Error(Errc::UnknownSeries, "unit " + unit);
    return series(u, name);
}

std::vector<RowKey> PanelDataset::rows() const {
    std::vector<RowKey> out;
    out.reserve(n_rows());
    for (std::size_t u = 0; u < units_.size(); ++u)
        for (int y = first_year_[u]; y <= last_year_[u]; ++y)
            out.push_back({static_cast<int>(u), y});
    return out;
}

PanelDataset PanelDataset::without_units(const std::vector<std::string>& excluded) const {
    std::set<std::string> drop(excluded.begin(), excluded.end());
    std::vector<std::string> units, row_units;
    std::vector<int> row_years;
    std::vector<std::vector<double>> row_values;
    for (std::size_t u = 0; u < units_.size(); ++u) {
        if (drop.count(units_[u])) continue;
        for (int y = first_year_[u]; y <= last_year_[u]; ++y) {
            row_units.push_back(units_[u]);
            row_years.push_back(y);
            std::vector<double> vals(series_names_.size());
            for (std::size_t j = 0; j < series_names_.size(); ++j)
                vals[j] = data_[j][cell(static_cast<int>(u), y)];
            row_values.push_back(std::move(vals));
        }
    }
    return build(series_names_, row_units, row_years, row_values);
}

PanelDataset load_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& required) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::ParseError, "cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line))
        throw Error(Errc::ParseError, path.string() + ": empty file");
    auto header = split_csv_line(trim_cr(line));
    if (header.size() < 2 || header[0] != "unit" || header[1] != "year")
        throw Error(Errc::ParseError, path.string() + ": header must start with unit,year");
    std::vector<std::string> series_names(header.begin() + 2, header.end());
    for (const auto& name : required)
        if (std::find(series_names.begin(), series_names.end(), name) == series_names.end())
            throw Error(Errc::UnknownSeries, path.string() + ": required series " + name);

    std::vector<std::string> units;
    std::vector<int> years;
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim_cr(line);
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw Error(Errc::ParseError, path.string() + ":" + std::to_string(lineno) +
                                              ": expected " + std::to_string(header.size()) +
                                              " fields, got " + std::to_string(fields.size()));
        units.push_back(fields[0]);
        int year = 0;
        auto [yp, yec] = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), year);
        if (yec != std::errc() || yp != fields[1].data() + fields[1].size())
            throw Error(Errc::ParseError,
                        path.string() + ":" + std::to_string(lineno) + ": column year: '" + fields[1] + "'");
        years.push_back(year);
        std::vector<double> vals(series_names.size(), kMissing);
        for (std::size_t j = 0; j < series_names.size(); ++j) {
            const std::string& f = fields[j + 2];
            if (f.empty()) continue;
            char* end = nullptr;
            double v = std::strtod(f.c_str(), &end);
            if (end != f.c_str() + f.size() || !std::isfinite(v))
                throw Error(Errc::ParseError, path.string() + ":" + std::to_string(lineno) +
                                                  ": column " + series_names[j] + ": '" + f + "'");
            vals[j] = v;
        }
        rows.push_back(std::move(vals));
    }
    return PanelDataset::build(series_names, units, years, rows);
}

void write_csv(const PanelDataset& panel, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::ParseError, "cannot write " + path.string());
    out << "unit,year";
    for (const auto& s : panel.series_names()) out << ',' << s;
    out << '\n';
    char buf[40];
    for (std::size_t u = 0; u < panel.units().size(); ++u) {
        int ui = static_cast<int>(u);
        for (int y = panel.first_year(ui); y <= panel.last_year(ui); ++y) {
            out << panel.units()[u] << ',' << y;
            for (const auto& s : panel.series_names()) {
                double v = panel.value(ui, y, s);
                out << ',';
                if (!std::isnan(v)) {
                    std::snprintf(buf, sizeof(buf), "%.17g", v);
                    out << buf;
                }
            }
            out << '\n';
        }
    }
}

SeriesView shift(const SeriesView& s, int offset) {
    SeriesView out;
    out.unit = s.unit;
    out.years = s.years;
    out.values.assign(s.size(), kMissing);
    if (s.years.empty()) return out;
    int lo = s.years.front();
    for (std::size_t i = 0; i < s.size(); ++i) {
        int source_year = s.years[i] - offset;
        long idx = static_cast<long>(source_year - lo);
        if (idx < 0 || idx >= static_cast<long>(s.size())) continue;
        // Years are contiguous in panel data; for general views fall back to search.
        if (s.years[static_cast<std::size_t>(idx)] == source_year) {
            out.values[i] = s.values[static_cast<std::size_t>(idx)];
        } else {
            auto it = std::lower_bound(s.years.begin(), s.years.end(), source_year);
            if (it != s.years.end() && *it == source_year)
                out.values[i] = s.values[static_cast<std::size_t>(it - s.years.begin())];
        }
    }
    return out;
}

std::vector<RowKey> listwise_complete(const PanelDataset& panel,
                                      const std::vector<ColumnRef>& columns) {
    for (const auto& c : columns)
        if (!panel.has_series(c.series)) throw Error(Errc::UnknownSeries, c.series);

    std::vector<RowKey> out;
    for (std::size_t u = 0; u < panel.units().size(); ++u) {
        int ui = static_cast<int>(u);
        std::vector<SeriesView> shifted;
        shifted.reserve(columns.size());
        for (const auto& c : columns) shifted.push_back(shift(panel.series(ui, c.series), c.offset));
        int lo = panel.first_year(ui);
        for (int y = lo; y <= panel.last_year(ui); ++y) {
            auto i = static_cast<std::size_t>(y - lo);
            bool complete = true;
            for (const auto& sv : shifted)
                if (sv.is_missing(i)) {
                    complete = false;
                    break;
                }
            if (complete) out.push_back({ui, y});
        }
    }
    return out;
}

std::vector<RowKey> listwise_complete(const PanelDataset& panel,
                                      const std::vector<std::string>& columns) {
    std::vector<ColumnRef> refs;
    refs.reserve(columns.size());
    for (const auto& name : columns) refs.push_back({name, 0});
    return listwise_complete(panel, refs);
}

}  // namespace shockpanel
