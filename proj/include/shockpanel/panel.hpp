#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace shockpanel {

/// One unit's values of a single series, ordered by year. Missing cells are
/// carried as NaN so lead/lag construction can propagate them.
struct SeriesView {
    std::string unit;
    std::vector<int> years;     // strictly ascending
    std::vector<double> values; // aligned with years, NaN = missing

    std::size_t size() const { return years.size(); }
    bool is_missing(std::size_t i) const { return std::isnan(values[i]); }
};

/// Row handle into a PanelDataset: unit index plus calendar year.
struct RowKey {
    int unit;
    int year;
    friend bool operator==(const RowKey&, const RowKey&) = default;
};

/// Column reference for completeness checks: a series name and a shift
/// offset (offset 0 is the series itself).
struct ColumnRef {
    std::string series;
    int offset = 0;
};

/// Rectangular unit-by-year table of named numeric series. Immutable after
/// construction; years within a unit form a contiguous ascending run and
/// every series has a cell (possibly missing) for every unit-year.
class PanelDataset {
  public:
    PanelDataset() = default;

    /// Builds a dataset from per-row records. Throws DuplicateKey / GapInPanel
    /// on invariant violations.
    static PanelDataset build(const std::vector<std::string>& series_names,
                              const std::vector<std::string>& units,
                              const std::vector<int>& years,
                              const std::vector<std::vector<double>>& row_values);

    const std::vector<std::string>& units() const { return units_; }
    const std::vector<std::string>& series_names() const { return series_names_; }

    int unit_index(const std::string& unit) const;  // -1 if absent
    bool has_series(const std::string& name) const;

    int first_year(int unit) const { return first_year_[unit]; }
    int last_year(int unit) const { return last_year_[unit]; }
    std::size_t n_rows() const { return offsets_.empty() ? 0 : offsets_.back(); }

    /// Cell value; NaN if missing. Year must lie in the unit's range.
    double value(int unit, int year, const std::string& series) const;

    SeriesView series(const std::string& unit, const std::string& name) const;
    SeriesView series(int unit, const std::string& name) const;

    /// All (unit, year) rows ordered by (unit, year).
    std::vector<RowKey> rows() const;

    /// Copy with the named units dropped.
    PanelDataset without_units(const std::vector<std::string>& excluded) const;

  private:
    std::size_t cell(int unit, int year) const;

    std::vector<std::string> units_;
    std::vector<std::string> series_names_;
    std::map<std::string, int> series_index_;
    std::vector<int> first_year_, last_year_;
    std::vector<std::size_t> offsets_;               // per unit, plus total at back
    std::vector<std::vector<double>> data_;          // per series, flat over units
};

/// Reads a panel CSV: header `unit,year,<series...>`, empty fields missing.
/// `required` lists series that must be present (beyond unit/year).
PanelDataset load_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& required = {});

/// Writes the panel back out in load_csv's format, numbers at 17
/// significant digits, rows ordered by (unit, year).
void write_csv(const PanelDataset& panel, const std::filesystem::path& path);

/// Lead/lag: output value at year y is the input value at year y - offset.
/// Positive offsets are lags, negative offsets are leads.
SeriesView shift(const SeriesView& s, int offset);

/// Rows where every referenced column (series shifted by its offset) is
/// non-missing, ordered by (unit, year).
std::vector<RowKey> listwise_complete(const PanelDataset& panel,
                                      const std::vector<ColumnRef>& columns);
std::vector<RowKey> listwise_complete(const PanelDataset& panel,
                                      const std::vector<std::string>& columns);

}  // namespace shockpanel
