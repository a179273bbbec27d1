#include "coloc/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace coloc {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Splits on commas and trims whitespace; empty fields are kept.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  return out;
}

double parse_number(const std::string& s, int line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v))
    throw ParseError("line " + std::to_string(line_no) + ": invalid number '" + s + "'");
  return v;
}

int parse_index(const std::string& s, int line_no) {
  const double v = parse_number(s, line_no);
  if (v != std::floor(v) || v < 0 || v > 1e9)
    throw ParseError("line " + std::to_string(line_no) + ": invalid device index '" + s + "'");
  return static_cast<int>(v);
}

bool skip_line(const std::string& line) {
  const auto b = line.find_first_not_of(" \t\r");
  return b == std::string::npos || line[b] == '#';
}

std::vector<Position> positions_from_json(const nlohmann::json& arr, const char* field) {
  if (!arr.is_array()) throw ParseError(std::string("scenario: '") + field + "' must be an array");
  std::vector<Position> out;
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 3) throw ParseError(std::string("scenario: '") + field + "' entries must be [x, y, z]");
    for (const auto& c : p)
      if (!c.is_number()) throw ParseError(std::string("scenario: '") + field + "' coordinates must be numbers");
    out.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

DeviceNetwork generate_cabin(const CabinLayout& layout) {
  if (layout.seat_rows < 1) throw std::invalid_argument("cabin: at least one seat row is required");
  if (!(layout.rack_offset >= -0.5 && layout.rack_offset <= 0.5))
    throw std::invalid_argument("cabin: rack offset must lie within half a row pitch");
  const double pitch = kCabinLength / layout.seat_rows;

  DeviceNetwork net;
  for (int r = 0; r < layout.seat_rows; ++r) {
    const double x = pitch * (r + 0.5);
    const double rack_x = x + layout.rack_offset * pitch;
    for (int s = 0; s < 3; ++s) net.install_points.emplace_back(x, kCabinSubRowGap * s, layout.seat_back_height);
    net.install_points.emplace_back(rack_x, 0.0, kCabinHeight);
    net.install_points.emplace_back(rack_x, kCabinWidth, kCabinHeight);
  }

  // Anchors sit in the two aisles, alternating floor and ceiling.
  const double ax_lo = 0.0;
  const double ax_hi = kCabinLength;
  const double ax_mid = 0.5 * kCabinLength;
  const double aisle_a = 0.5 * kCabinSubRowGap;
  const double aisle_b = 1.5 * kCabinSubRowGap;
  net.anchors = {
      {ax_lo, aisle_a, 0.0},  {ax_lo, aisle_b, kCabinHeight},
      {ax_mid, aisle_a, kCabinHeight}, {ax_mid, aisle_b, 0.0},
      {ax_hi, aisle_a, 0.0},  {ax_hi, aisle_b, kCabinHeight},
  };
  return net;
}

DeviceNetwork generate_building() {
  DeviceNetwork net;
  // Ceiling detectors (cameras, glass-break) on a 7 x 3 grid.
  for (double y : {3.5, 9.5, 15.5})
    for (int k = 0; k < 7; ++k) net.install_points.emplace_back(1.5 + 2.75 * k, y, 2.5);
  // Floor-level detectors (gas, motion) on an offset 7 x 3 grid.
  for (double y : {1.0, 7.0, 13.0})
    for (int k = 0; k < 7; ++k) net.install_points.emplace_back(0.75 + 3.0 * k, y, 0.3);
  net.anchors = {{0.0, 0.0, 2.6}, {19.5, 0.0, 0.0}, {0.0, 19.0, 0.0}, {19.5, 19.0, 2.6}};
  return net;
}

DeviceNetwork lab_network(double tall_height) {
  if (tall_height != 1.47 && tall_height != 1.97)
    throw DomainError("lab_network: tall device height must be 1.47 or 1.97");
  DeviceNetwork net;
  net.anchors = {{0, 1, 0.48}, {3, 1, 1.1}, {0, 5, 0.48}, {3, 5, 0.48}};
  net.install_points = {
      {1.5, 1, 0.48}, {0, 2, 0.48}, {1.5, 2, 0.48}, {3, 2, 0.48}, {0, 3, 0.48},
      {1.5, 3, 0.48}, {3, 3, 0.48}, {0, 4, 0.48}, {1.5, 4, 0.48}, {3, 4, 0.48},
      {1.5, 5, 0.48}, {0.75, 2, tall_height}, {0.75, 3, tall_height}, {0.75, 4, tall_height},
  };
  return net;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::array<const char*, 4> kBuiltins = {"cabin", "building", "lab-1.47", "lab-1.97"};

}  // namespace

bool is_builtin_scenario(const std::string& name) {
  return std::find(kBuiltins.begin(), kBuiltins.end(), name) != kBuiltins.end();
}

ScenarioConfig builtin_scenario(const std::string& name) {
  ScenarioConfig cfg;
  cfg.name = name;
  if (name == "cabin") {
    cfg.network = generate_cabin();
  } else if (name == "building") {
    cfg.network = generate_building();
  } else if (name == "lab-1.47" || name == "lab-1.97") {
    cfg.network = lab_network(name == "lab-1.47" ? 1.47 : 1.97);
    cfg.path_loss.p0 = -42.35;
    cfg.path_loss.gamma = 1.53;
  } else {
    throw std::invalid_argument("unknown built-in scenario '" + name + "'");
  }
  return cfg;
}

ScenarioConfig resolve_scenario(const std::string& name_or_path) {
  if (is_builtin_scenario(name_or_path)) return builtin_scenario(name_or_path);
  if (!std::filesystem::exists(name_or_path))
    throw std::invalid_argument("unknown scenario '" + name_or_path +
                                "': not a built-in name (cabin, building, lab-1.47, lab-1.97) or an existing file");
  return load_scenario(name_or_path);
}

// ---------------------------------------------------------------------------

ScenarioConfig parse_scenario(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("scenario: top level must be an object");
  for (const char* key : {"name", "anchors", "install_points", "path_loss"})
    if (!j.contains(key)) throw ParseError(std::string("scenario: missing field '") + key + "'");

  ScenarioConfig cfg;
  try {
    cfg.name = j.at("name").get<std::string>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    const auto& pl = j.at("path_loss");
    for (const char* key : {"p0", "gamma"})
      if (!pl.contains(key)) throw ParseError(std::string("scenario: missing field 'path_loss.") + key + "'");
    cfg.path_loss.p0 = pl.at("p0").get<double>();
    cfg.path_loss.gamma = pl.at("gamma").get<double>();
    cfg.path_loss.d0 = pl.value("d0", 1.0);
    cfg.path_loss.sigma = pl.value("sigma", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  cfg.network.anchors = positions_from_json(j.at("anchors"), "anchors");
  cfg.network.install_points = positions_from_json(j.at("install_points"), "install_points");
  cfg.network.validate();
  cfg.path_loss.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) { return parse_scenario(read_file(path)); }

std::string format_scenario(const ScenarioConfig& config) {
  nlohmann::ordered_json j;
  j["name"] = config.name;
  j["seed"] = config.seed;
  j["path_loss"] = {{"p0", config.path_loss.p0},
                    {"gamma", config.path_loss.gamma},
                    {"d0", config.path_loss.d0},
                    {"sigma", config.path_loss.sigma}};
  nlohmann::ordered_json anchors = nlohmann::ordered_json::array();
  for (const auto& p : config.network.anchors) anchors.push_back({p.x(), p.y(), p.z()});
  nlohmann::ordered_json points = nlohmann::ordered_json::array();
  for (const auto& p : config.network.install_points) points.push_back({p.x(), p.y(), p.z()});
  j["anchors"] = std::move(anchors);
  j["install_points"] = std::move(points);

  // One position per line keeps fixtures diffable.
  std::ostringstream out;
  out << "{\n";
  out << "  \"name\": " << j["name"].dump() << ",\n";
  out << "  \"seed\": " << j["seed"].dump() << ",\n";
  out << "  \"path_loss\": " << j["path_loss"].dump() << ",\n";
  for (const char* key : {"anchors", "install_points"}) {
    out << "  \"" << key << "\": [";
    const auto& arr = j[key];
    for (std::size_t i = 0; i < arr.size(); ++i) out << (i ? ",\n    " : "\n    ") << arr[i].dump();
    out << (arr.empty() ? "]" : "\n  ]") << (std::string(key) == "anchors" ? ",\n" : "\n");
  }
  out << "}\n";
  return out.str();
}

void save_scenario(const ScenarioConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << format_scenario(config);
}

// ---------------------------------------------------------------------------

RssMatrix parse_measurements(const std::string& text, const DeviceNetwork& network) {
  const int na = network.num_anchors();
  const int nt = network.num_blindfolded();
  const int n = network.num_devices();
  // File order is anchors first; library order is blindfolded first.
  auto to_library = [&](int file_index) { return file_index < na ? nt + file_index : file_index - na; };

  RssMatrix rss(n);
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    const auto f = split_csv(line);
    if (f.size() != 3) throw ParseError("line " + std::to_string(line_no) + ": expected i,j,rss_dBm");
    const int i = parse_index(f[0], line_no);
    const int j = parse_index(f[1], line_no);
    const double v = parse_number(f[2], line_no);
    if (i >= n || j >= n) throw ParseError("line " + std::to_string(line_no) + ": device index out of range");
    if (i == j) throw ParseError("line " + std::to_string(line_no) + ": self measurement");
    rss.set(to_library(i), to_library(j), v);
  }
  rss.symmetrize();
  return rss;
}

RssMatrix load_measurements(const std::filesystem::path& path, const DeviceNetwork& network) {
  return parse_measurements(read_file(path), network);
}

std::string format_measurements(const RssMatrix& rss, const DeviceNetwork& network) {
  const int na = network.num_anchors();
  const int nt = network.num_blindfolded();
  auto to_file = [&](int lib) { return lib < nt ? lib + na : lib - nt; };
  std::ostringstream out;
  out.precision(17);
  for (int fi = 0; fi < rss.size(); ++fi) {
    for (int fj = fi + 1; fj < rss.size(); ++fj) {
      const int i = fi < na ? nt + fi : fi - na;
      const int j = fj < na ? nt + fj : fj - na;
      if (rss.measured(i, j)) out << to_file(i) << ',' << to_file(j) << ',' << rss.at(i, j) << '\n';
    }
  }
  return out.str();
}

std::vector<std::pair<double, double>> parse_path_loss_samples(const std::string& text) {
  std::vector<std::pair<double, double>> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    const auto f = split_csv(line);
    if (f.size() != 2) throw ParseError("line " + std::to_string(line_no) + ": expected distance_m,rss_dBm");
    const double d = parse_number(f[0], line_no);
    if (!(d > 0.0)) throw ParseError("line " + std::to_string(line_no) + ": distance must be positive");
    out.emplace_back(d, parse_number(f[1], line_no));
  }
  return out;
}

std::vector<std::pair<double, double>> load_path_loss_samples(const std::filesystem::path& path) {
  return parse_path_loss_samples(read_file(path));
}

}  // namespace coloc
