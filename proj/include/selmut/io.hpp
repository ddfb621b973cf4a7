#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "selmut/types.hpp"

namespace selmut {

/// Shortest round-trip decimal form of x ("nan", "inf", "-inf" for non-finite values).
std::string format_number(double x);

/// Flat key-value configuration with [sections]. Keys are stored as
/// "section.key"; '#' starts a comment; values are trimmed strings.
class Config {
public:
    static Config parse(const std::string& text, const std::string& origin = "<string>");
    static Config load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback) const;
    std::string require(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    /// Comma-separated numbers; "1/200" style fractions are accepted.
    Vec get_list(const std::string& key, const Vec& fallback = {}) const;
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    /// Keys under "section." with the prefix stripped.
    std::map<std::string, std::string> section(const std::string& name) const;

    /// For each key, SELMUT_<KEY> (upper case, '.' and '-' as '_') overrides the value.
    /// Returns the overridden keys.
    std::vector<std::string> apply_env(const std::vector<std::string>& keys);

    /// Same format as parse() accepts, sections in lexicographic order.
    std::string serialize() const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Parses a number, accepting "a/b" fractions. Throws UsageError.
double parse_number(const std::string& text, const std::string& what);

/// Ordered sections of key-value pairs, written in the Config format.
class KvReport {
public:
    void put(const std::string& section, const std::string& key, const std::string& value);
    void put(const std::string& section, const std::string& key, double value);
    std::string str() const;
    void write(const std::filesystem::path& path) const;

private:
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections_;
};

/// RFC-4180 style CSV with a header row.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<Vec>& columns);
std::string csv_string(const std::vector<std::string>& header, const std::vector<Vec>& columns);

void write_text(const std::filesystem::path& path, const std::string& text);

struct PlotSeries {
    std::string name;
    Vec x;
    Vec y;
};

struct PlotStyle {
    std::string title;
    std::string xlabel = "x";
    std::string ylabel = "y";
    bool log_x = false;
    bool log_y = false;
    bool lines = true;
    bool markers = false;
    bool annotate_slope = false;  ///< least-squares slope of the first series in plot coordinates
    int width = 640;
    int height = 420;
};

/// Static SVG 1.1 document; identical inputs give identical bytes.
std::string emit_plot(const std::vector<PlotSeries>& series, const PlotStyle& style);

}  // namespace selmut
