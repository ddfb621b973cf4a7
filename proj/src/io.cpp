#include "selmut/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace selmut {

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), res.ptr);
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Fixed-precision formatting for SVG coordinates.
std::string fixed(double x, int digits = 2) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::fixed, digits);
    return std::string(buf.data(), res.ptr);
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

double parse_number(const std::string& text, const std::string& what) {
    const std::string s = trim(text);
    auto one = [&](const std::string& part) {
        double v = 0.0;
        const auto res = std::from_chars(part.data(), part.data() + part.size(), v);
        if (res.ec != std::errc() || res.ptr != part.data() + part.size() || part.empty()) {
            throw UsageError(what + ": '" + text + "' is not a number");
        }
        return v;
    };
    const auto slash = s.find('/');
    if (slash == std::string::npos) return one(s);
    const double den = one(trim(s.substr(slash + 1)));
    if (den == 0.0) throw UsageError(what + ": division by zero in '" + text + "'");
    return one(trim(s.substr(0, slash))) / den;
}

Config Config::parse(const std::string& text, const std::string& origin) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw UsageError(origin + ":" + std::to_string(lineno) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw UsageError(origin + ":" + std::to_string(lineno) + ": empty key");
        cfg.values_[section.empty() ? key : section + "." + key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::string Config::require(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("missing config key '" + key + "'");
    return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_number(it->second, key);
}

long long Config::get_int(const std::string& key, long long fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const double v = parse_number(it->second, key);
    if (v != std::floor(v)) throw UsageError(key + ": expected an integer, got '" + it->second + "'");
    return static_cast<long long>(v);
}

Vec Config::get_list(const std::string& key, const Vec& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    Vec out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(item, key));
    return out;
}

std::map<std::string, std::string> Config::section(const std::string& name) const {
    std::map<std::string, std::string> out;
    const std::string prefix = name + ".";
    for (const auto& [k, v] : values_) {
        if (k.compare(0, prefix.size(), prefix) == 0) out[k.substr(prefix.size())] = v;
    }
    return out;
}

std::vector<std::string> Config::apply_env(const std::vector<std::string>& keys) {
    std::vector<std::string> applied;
    for (const auto& key : keys) {
        std::string env = "SELMUT_";
        for (char c : key) env += (c == '.' || c == '-') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (const char* v = std::getenv(env.c_str())) {
            values_[key] = trim(v);
            applied.push_back(key);
        }
    }
    return applied;
}

std::string Config::serialize() const {
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> grouped;
    for (const auto& [k, v] : values_) {
        const auto dot = k.find('.');
        if (dot == std::string::npos) grouped[""].emplace_back(k, v);
        else grouped[k.substr(0, dot)].emplace_back(k.substr(dot + 1), v);
    }
    std::string out;
    for (const auto& [section, entries] : grouped) {
        if (!section.empty()) out += "[" + section + "]\n";
        for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
        out += "\n";
    }
    return out;
}

void KvReport::put(const std::string& section, const std::string& key, const std::string& value) {
    auto it = std::find_if(sections_.begin(), sections_.end(), [&](const auto& s) { return s.first == section; });
    if (it == sections_.end()) {
        sections_.emplace_back(section, std::vector<std::pair<std::string, std::string>>{});
        it = std::prev(sections_.end());
    }
    for (auto& kv : it->second) {
        if (kv.first == key) {
            kv.second = value;
            return;
        }
    }
    it->second.emplace_back(key, value);
}

void KvReport::put(const std::string& section, const std::string& key, double value) {
    put(section, key, format_number(value));
}

std::string KvReport::str() const {
    std::string out;
    for (const auto& [section, entries] : sections_) {
        out += "[" + section + "]\n";
        for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
        out += "\n";
    }
    return out;
}

void KvReport::write(const std::filesystem::path& path) const { write_text(path, str()); }

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write '" + path.string() + "'");
    out << text;
}

std::string csv_string(const std::vector<std::string>& header, const std::vector<Vec>& columns) {
    if (header.size() != columns.size()) throw UsageError("csv: header and column counts differ");
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (const auto& c : columns) {
        if (c.size() != rows) throw UsageError("csv: columns have different lengths");
    }
    auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    };
    std::string out;
    for (std::size_t k = 0; k < header.size(); ++k) out += (k ? "," : "") + quote(header[k]);
    out += "\r\n";
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < columns.size(); ++k) out += (k ? "," : "") + format_number(columns[k][r]);
        out += "\r\n";
    }
    return out;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<Vec>& columns) {
    write_text(path, csv_string(header, columns));
}

std::string emit_plot(const std::vector<PlotSeries>& series, const PlotStyle& style) {
    if (series.empty()) throw UsageError("emit_plot: no series");
    bool any = false;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    auto tx = [&](double x) { return style.log_x ? std::log10(x) : x; };
    auto ty = [&](double y) { return style.log_y ? std::log10(y) : y; };
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw UsageError("emit_plot: series '" + s.name + "' has mismatched x and y");
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            if ((style.log_x && !(s.x[k] > 0.0)) || (style.log_y && !(s.y[k] > 0.0))) {
                throw UsageError("emit_plot: non-positive value on a log axis in series '" + s.name + "'");
            }
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            any = true;
            x0 = std::min(x0, tx(s.x[k]));
            x1 = std::max(x1, tx(s.x[k]));
            y0 = std::min(y0, ty(s.y[k]));
            y1 = std::max(y1, ty(s.y[k]));
        }
    }
    if (!any) throw UsageError("emit_plot: empty series");
    if (x1 == x0) { x0 -= 0.5; x1 += 0.5; }
    if (y1 == y0) { y0 -= 0.5; y1 += 0.5; }

    const double W = style.width, H = style.height;
    const double left = 70, right = 20, top = 40, bottom = 50;
    auto px = [&](double x) { return left + (tx(x) - x0) / (x1 - x0) * (W - left - right); };
    auto py = [&](double y) { return H - bottom - (ty(y) - y0) / (y1 - y0) * (H - top - bottom); };
    static const std::array<const char*, 6> colours = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << style.width << "\" height=\""
        << style.height << "\" viewBox=\"0 0 " << style.width << " " << style.height << "\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << style.width << "\" height=\"" << style.height << "\" fill=\"white\"/>\n";
    svg << "<g stroke=\"black\" stroke-width=\"1\">\n"
        << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(H - bottom) << "\" x2=\"" << fixed(W - right) << "\" y2=\""
        << fixed(H - bottom) << "\"/>\n"
        << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(top) << "\" x2=\"" << fixed(left) << "\" y2=\""
        << fixed(H - bottom) << "\"/>\n</g>\n";

    // Ticks at the axis ends, labelled in data units.
    auto label = [&](double v, bool log) { return log ? "1e" + fixed(v, 2) : format_number(std::round(v * 1e4) / 1e4); };
    svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
    svg << "<text x=\"" << fixed(left) << "\" y=\"" << fixed(H - bottom + 16) << "\" text-anchor=\"middle\">"
        << label(x0, style.log_x) << "</text>\n";
    svg << "<text x=\"" << fixed(W - right) << "\" y=\"" << fixed(H - bottom + 16) << "\" text-anchor=\"middle\">"
        << label(x1, style.log_x) << "</text>\n";
    svg << "<text x=\"" << fixed(left - 6) << "\" y=\"" << fixed(H - bottom) << "\" text-anchor=\"end\">"
        << label(y0, style.log_y) << "</text>\n";
    svg << "<text x=\"" << fixed(left - 6) << "\" y=\"" << fixed(top + 4) << "\" text-anchor=\"end\">"
        << label(y1, style.log_y) << "</text>\n";
    svg << "<text x=\"" << fixed(W / 2) << "\" y=\"" << fixed(H - 12) << "\" text-anchor=\"middle\">"
        << xml_escape(style.xlabel) << "</text>\n";
    svg << "<text x=\"14\" y=\"" << fixed(H / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << fixed(H / 2)
        << ")\">" << xml_escape(style.ylabel) << "</text>\n";
    if (!style.title.empty()) {
        svg << "<text x=\"" << fixed(W / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
            << xml_escape(style.title) << "</text>\n";
    }
    svg << "</g>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& ser = series[s];
        const char* colour = colours[s % colours.size()];
        if (style.lines && ser.x.size() > 1) {
            svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t k = 0; k < ser.x.size(); ++k) {
                if (!std::isfinite(ser.x[k]) || !std::isfinite(ser.y[k])) continue;
                svg << (k ? " " : "") << fixed(px(ser.x[k])) << "," << fixed(py(ser.y[k]));
            }
            svg << "\"/>\n";
        }
        if (style.markers || ser.x.size() == 1) {
            for (std::size_t k = 0; k < ser.x.size(); ++k) {
                if (!std::isfinite(ser.x[k]) || !std::isfinite(ser.y[k])) continue;
                svg << "<circle cx=\"" << fixed(px(ser.x[k])) << "\" cy=\"" << fixed(py(ser.y[k])) << "\" r=\"3\" fill=\""
                    << colour << "\"/>\n";
            }
        }
        svg << "<text x=\"" << fixed(W - right - 4) << "\" y=\"" << fixed(top + 14 * static_cast<double>(s + 1))
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\" fill=\"" << colour << "\">"
            << xml_escape(ser.name) << "</text>\n";
    }

    if (style.annotate_slope && series.front().x.size() >= 2) {
        const auto& ser = series.front();
        double mx = 0, my = 0;
        const double n = static_cast<double>(ser.x.size());
        for (std::size_t k = 0; k < ser.x.size(); ++k) {
            mx += tx(ser.x[k]) / n;
            my += ty(ser.y[k]) / n;
        }
        double sxx = 0, sxy = 0;
        for (std::size_t k = 0; k < ser.x.size(); ++k) {
            sxx += (tx(ser.x[k]) - mx) * (tx(ser.x[k]) - mx);
            sxy += (tx(ser.x[k]) - mx) * (ty(ser.y[k]) - my);
        }
        const double slope = sxx > 0 ? sxy / sxx : 0.0;
        svg << "<text x=\"" << fixed(left + 10) << "\" y=\"" << fixed(top + 14)
            << "\" font-family=\"sans-serif\" font-size=\"12\">slope = " << fixed(slope, 3) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace selmut
