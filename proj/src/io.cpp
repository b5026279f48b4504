#include "scanline/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "scanline/errors.hpp"

namespace scanline {
namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

long long parse_ll(const std::string& text, const std::string& what) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(text.c_str(), &end, 10);
    if (errno != 0 || end == text.c_str() || *end != '\0') {
        throw ConfigError(what + ": expected integer, got '" + text + "'");
    }
    return v;
}

double parse_dbl(const std::string& text, const std::string& what) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (errno != 0 || end == text.c_str() || *end != '\0') {
        throw ConfigError(what + ": expected number, got '" + text + "'");
    }
    return v;
}

}  // namespace

void write_grid_ascii(std::ostream& os, const Grid& grid) {
    os << grid.height << ' ' << grid.width << '\n';
    char buf[32];
    for (int r = 0; r < grid.height; ++r) {
        for (int c = 0; c < grid.width; ++c) {
            std::snprintf(buf, sizeof(buf), "%.9g", grid(r, c));
            os << (c ? " " : "") << buf;
        }
        os << '\n';
    }
}

Grid read_grid_ascii(std::istream& is) {
    int h = 0;
    int w = 0;
    if (!(is >> h >> w) || h < 1 || w < 1) {
        throw std::runtime_error("bad grid header (expected 'height width')");
    }
    Grid g(h, w);
    for (int i = 0; i < g.size(); ++i) {
        if (!(is >> g.data[i])) {
            throw std::runtime_error("grid truncated at value " + std::to_string(i));
        }
    }
    return g;
}

bool Config::has(std::string_view key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return true;
    }
    return false;
}

const std::string& Config::get(std::string_view key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return v;
    }
    throw ConfigError("missing config key: " + std::string(key));
}

std::string Config::get_or(std::string_view key, std::string fallback) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return v;
    }
    return fallback;
}

int Config::get_int(std::string_view key, int fallback) const {
    if (!has(key)) return fallback;
    const long long v = parse_ll(get(key), std::string(key));
    return static_cast<int>(v);
}

std::uint64_t Config::get_uint64(std::string_view key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string& text = get(key);
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
    if (errno != 0 || end == text.c_str() || *end != '\0') {
        throw ConfigError(std::string(key) + ": expected integer, got '" + text + "'");
    }
    return v;
}

double Config::get_double(std::string_view key, double fallback) const {
    if (!has(key)) return fallback;
    return parse_dbl(get(key), std::string(key));
}

bool Config::get_bool(std::string_view key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = get(key);
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ConfigError(std::string(key) + ": expected boolean, got '" + v + "'");
}

void Config::set(std::string_view key, std::string value) {
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    entries_.emplace_back(std::string(key), std::move(value));
}

void Config::reject_unknown_keys(std::span<const std::string_view> allowed) const {
    for (const auto& [k, v] : entries_) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            throw ConfigError("unknown config key: " + k);
        }
    }
}

Config parse_config_text(std::istream& is) {
    Config cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t colon = t.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key: value'");
        }
        const std::string key = trim(t.substr(0, colon));
        const std::string value = trim(t.substr(colon + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": empty key");
        }
        cfg.set(key, value);
    }
    return cfg;
}

Config load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    return parse_config_text(is);
}

void apply_override(Config& config, const std::string& key_value) {
    const std::size_t eq = key_value.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override must be key=value: " + key_value);
    }
    config.set(trim(key_value.substr(0, eq)), trim(key_value.substr(eq + 1)));
}

std::string config_echo(const Config& config) {
    std::vector<std::pair<std::string, std::string>> sorted = config.entries();
    std::sort(sorted.begin(), sorted.end());
    std::ostringstream os;
    for (const auto& [k, v] : sorted) os << k << ": " << v << "\n";
    return os.str();
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (const std::string& item : parse_string_list(text)) {
        out.push_back(static_cast<int>(parse_ll(item, "list item")));
    }
    return out;
}

std::vector<std::string> parse_string_list(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    std::istringstream is(text);
    while (std::getline(is, current, ',')) {
        const std::string t = trim(current);
        if (t.empty()) throw ConfigError("empty list item in '" + text + "'");
        out.push_back(t);
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(field);
            field.clear();
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    out.push_back(field);
    return out;
}

std::vector<ParsedFrameRow> read_frames_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) {
        throw std::runtime_error("frames.csv line 1: empty file");
    }
    std::vector<ParsedFrameRow> rows;
    int line_no = 1;
    auto fail = [&](const std::string& why) -> void {
        throw std::runtime_error("frames.csv line " + std::to_string(line_no) +
                                 ": " + why);
    };
    while (std::getline(is, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> f = split_csv_line(line);
        try {
            if (f.size() < 8) fail("expected at least 8 fields");
            ParsedFrameRow row;
            row.frame = static_cast<int>(parse_ll(f[0], "frame"));
            row.policy = f[1];
            row.k = static_cast<int>(parse_ll(f[2], "k"));
            row.target = parse_dbl(f[3], "target");
            row.estimate = parse_dbl(f[4], "estimate");
            row.std_dev = parse_dbl(f[5], "std");
            row.uncertainty = parse_dbl(f[6], "uncertainty");
            if (row.k < 0 || static_cast<int>(f.size()) != 8 + row.k) {
                fail("field count does not match k=" + f[2]);
            }
            for (int i = 0; i < row.k; ++i) {
                row.columns.push_back(
                    static_cast<int>(parse_ll(f[7 + i], "column")));
            }
            row.wall_ms = parse_dbl(f.back(), "wall_ms");
            rows.push_back(std::move(row));
        } catch (const ConfigError& e) {
            fail(e.what());
        }
    }
    if (rows.empty()) {
        throw std::runtime_error("frames.csv line 1: no data rows");
    }
    return rows;
}

std::vector<ParsedMaeRow> read_mae_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) {
        throw std::runtime_error("mae.csv line 1: empty file");
    }
    std::vector<ParsedMaeRow> rows;
    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> f = split_csv_line(line);
        try {
            if (f.size() != 5) throw ConfigError("expected 5 fields");
            ParsedMaeRow row;
            row.policy = f[0];
            row.budget = static_cast<int>(parse_ll(f[1], "budget"));
            row.seed = static_cast<int>(parse_ll(f[2], "seed"));
            row.ok = (f[3] == "ok");
            row.mae = row.ok ? parse_dbl(f[4], "mae") : 0.0;
            rows.push_back(std::move(row));
        } catch (const ConfigError& e) {
            throw std::runtime_error("mae.csv line " + std::to_string(line_no) +
                                     ": " + e.what());
        }
    }
    return rows;
}

}  // namespace scanline
