#include "dicke/output.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace dicke::out {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::array<char, 17> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + 16, v, 16);
  std::string s(buf.data(), p);
  return std::string(16 - s.size(), '0') + s;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), p};
}

nlohmann::json RunMeta::as_json() const {
  nlohmann::json j;
  j["version"] = kVersion;
  j["command"] = command;
  j["config"] = config;
  j["config_hash"] = config_hash();
  j["seed"] = seed;
  for (const auto& [k, v] : extra) j[k] = v;
  return j;
}

std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\r\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

CsvWriter::CsvWriter(const RunMeta& meta, std::vector<std::string> header) : columns_(header.size()) {
  text_ += "# dicke " + std::string(kVersion) + "\n";
  text_ += "# command: " + meta.command + "\n";
  text_ += "# config: " + meta.config_text() + "\n";
  text_ += "# config_hash: " + meta.config_hash() + "\n";
  text_ += "# seed: " + std::to_string(meta.seed) + "\n";
  for (const auto& [k, v] : meta.extra) text_ += "# " + k + ": " + v + "\n";
  row(header);
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  row(cells);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::logic_error("CsvWriter: wrong number of cells");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    text_ += csv_escape(cells[i]);
  }
  text_ += "\r\n";
}

namespace {

constexpr double kW = 480.0, kH = 480.0, kPad = 40.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string svg_open(const std::string& title) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kW) + "\" height=\"" + fmt(kH) +
                  "\" viewBox=\"0 0 " + fmt(kW) + " " + fmt(kH) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + fmt(kW) + "\" height=\"" + fmt(kH) + "\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt(kPad) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" + title + "</text>\n";
  s += "<rect x=\"" + fmt(kPad) + "\" y=\"" + fmt(kPad) + "\" width=\"" + fmt(kW - 2 * kPad) + "\" height=\"" +
       fmt(kH - 2 * kPad) + "\" fill=\"none\" stroke=\"black\"/>\n";
  return s;
}

struct Box {
  double xmin, xmax, ymin, ymax;
  double px(double x) const { return kPad + (x - xmin) / (xmax - xmin) * (kW - 2 * kPad); }
  double py(double y) const { return kH - kPad - (y - ymin) / (ymax - ymin) * (kH - 2 * kPad); }
};

}  // namespace

std::string svg_scatter(const std::vector<SvgSeries>& series, double xmin, double xmax, double ymin, double ymax,
                        const std::string& title, bool unit_circle) {
  const Box b{xmin, xmax, ymin, ymax};
  std::string s = svg_open(title);
  if (unit_circle) {
    s += "<ellipse cx=\"" + fmt(b.px(0)) + "\" cy=\"" + fmt(b.py(0)) + "\" rx=\"" + fmt(b.px(1) - b.px(0)) +
         "\" ry=\"" + fmt(b.py(0) - b.py(1)) + "\" fill=\"none\" stroke=\"#999\"/>\n";
  }
  for (const auto& ser : series) {
    for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
      s += "<circle cx=\"" + fmt(b.px(ser.x[i])) + "\" cy=\"" + fmt(b.py(ser.y[i])) + "\" r=\"1.2\" fill=\"" +
           ser.color + "\"/>\n";
    }
  }
  return s + "</svg>\n";
}

std::string svg_lines(const std::vector<SvgSeries>& series, const std::string& title) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& ser : series) {
    for (double v : ser.x) {
      if (std::isfinite(v)) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
    }
    for (double v : ser.y) {
      if (std::isfinite(v)) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
    }
  }
  if (!(xmax > xmin)) xmin -= 1, xmax += 1;
  if (!(ymax > ymin)) ymin -= 1, ymax += 1;
  const Box b{xmin, xmax, ymin, ymax};
  std::string s = svg_open(title);
  for (const auto& ser : series) {
    s += "<polyline fill=\"none\" stroke=\"" + ser.color + "\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
      if (!std::isfinite(ser.y[i])) continue;
      s += fmt(b.px(ser.x[i])) + "," + fmt(b.py(ser.y[i])) + " ";
    }
    s += "\"/>\n";
  }
  return s + "</svg>\n";
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + tmp.string());
    f << text;
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

const std::string& palette(std::size_t i) {
  static const std::array<std::string, 9> colors = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                    "#8c564b", "#e377c2", "#7f7f7f", "#17becf"};
  return colors[i % colors.size()];
}

}  // namespace dicke::out
