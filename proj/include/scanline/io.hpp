#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scanline/grid.hpp"

namespace scanline {

// ASCII grid: header "height width", then height lines of width values.
void write_grid_ascii(std::ostream& os, const Grid& grid);
Grid read_grid_ascii(std::istream& is);  // throws std::runtime_error

// Flat `key: value` configuration with insertion order preserved.
class Config {
public:
    bool has(std::string_view key) const;
    const std::string& get(std::string_view key) const;  // throws ConfigError
    std::string get_or(std::string_view key, std::string fallback) const;
    int get_int(std::string_view key, int fallback) const;
    std::uint64_t get_uint64(std::string_view key, std::uint64_t fallback) const;
    double get_double(std::string_view key, double fallback) const;
    bool get_bool(std::string_view key, bool fallback) const;
    void set(std::string_view key, std::string value);  // replaces in place

    const std::vector<std::pair<std::string, std::string>>& entries() const {
        return entries_;
    }

    // Throws ConfigError naming the first key not in `allowed`.
    void reject_unknown_keys(std::span<const std::string_view> allowed) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

// Lines of `key: value`; blank lines and lines starting with # are skipped.
Config parse_config_text(std::istream& is);  // throws ConfigError
Config load_config_file(const std::string& path);

// "key=value" (CLI override form).
void apply_override(Config& config, const std::string& key_value);

// Canonical echo of the effective configuration, one sorted line per key.
std::string config_echo(const Config& config);

// Integer list "1,3,5"; string list "a,b"; both reject empties.
std::vector<int> parse_int_list(const std::string& text);
std::vector<std::string> parse_string_list(const std::string& text);

// One parsed frames.csv row (`col_1..col_K` block sized by the row's k).
struct ParsedFrameRow {
    int frame = 0;
    std::string policy;
    int k = 0;
    double target = 0.0;
    double estimate = 0.0;
    double std_dev = 0.0;
    double uncertainty = 0.0;
    std::vector<int> columns;
    double wall_ms = 0.0;
};

// Throws std::runtime_error naming the first unparseable line.
std::vector<ParsedFrameRow> read_frames_csv(std::istream& is);

struct ParsedMaeRow {
    std::string policy;
    int budget = 0;
    int seed = 0;
    bool ok = false;
    double mae = 0.0;
};

std::vector<ParsedMaeRow> read_mae_csv(std::istream& is);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace scanline
