#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace dicke::out {

inline constexpr const char* kVersion = "0.1.0";

/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

/// Shortest round-trip decimal form.
std::string format_double(double v);

/// Provenance written at the top of every output file.
struct RunMeta {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  /// Extra key/value lines (e.g. energy-drift audit), in insertion order.
  std::vector<std::pair<std::string, std::string>> extra;

  std::string config_text() const { return config.dump(); }
  std::string config_hash() const { return hex64(fnv1a64(config_text())); }
  nlohmann::json as_json() const;
};

class CsvWriter {
 public:
  CsvWriter(const RunMeta& meta, std::vector<std::string> header);
  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& cells);
  const std::string& text() const { return text_; }

 private:
  std::size_t columns_;
  std::string text_;
};

/// Quotes a cell when it contains a comma, quote or line break.
std::string csv_escape(const std::string& cell);

struct SvgSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
};

/// Scatter plot of all series in the fixed box [xmin, xmax] x [ymin, ymax].
std::string svg_scatter(const std::vector<SvgSeries>& series, double xmin, double xmax, double ymin, double ymax,
                        const std::string& title, bool unit_circle = false);
/// Polylines; the box is fitted to the data.
std::string svg_lines(const std::vector<SvgSeries>& series, const std::string& title);

/// Writes atomically enough for our purposes: to a temporary name, then renamed.
void write_file(const std::filesystem::path& path, const std::string& text);

/// A small fixed palette indexed cyclically.
const std::string& palette(std::size_t i);

}  // namespace dicke::out
