#pragma once

#include "coloc/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace coloc {

/// Thrown when a scenario or measurement file cannot be parsed.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScenarioConfig {
  std::string name;
  DeviceNetwork network;
  PathLossParams path_loss;
  std::uint64_t seed = 0;
};

// Cabin geometry constants (meters).
inline constexpr double kCabinLength = 35.7;
inline constexpr double kCabinWidth = 4.72;
inline constexpr double kCabinHeight = 1.5;
inline constexpr double kCabinSubRowGap = 2.36;

struct CabinLayout {
  /// Seat rows spread uniformly over the cabin length.
  int seat_rows = 15;
  double seat_back_height = 0.5;
  /// Longitudinal offset of the rack devices from their seat row, as a
  /// fraction of the row pitch.  Half a pitch keeps a rack device from
  /// sitting directly above a seat device.
  double rack_offset = 0.5;
};

/// Seat-back devices on three longitudinal sub-rows (y = 0, 2.36, 4.72)
/// with one device per seat row, overhead-rack devices above the two
/// outer sub-rows at the ceiling, and six anchors in the aisles at both
/// end walls and mid-cabin.
DeviceNetwork generate_cabin(const CabinLayout& layout = {});

/// 42 detectors over a ceiling stratum and a floor stratum, four corner anchors.
DeviceNetwork generate_building();

/// The 17-device lab layout; devices 16-18 stand at `tall_height`
/// (1.47 or 1.97 m).  Anchors are devices 1-4.
DeviceNetwork lab_network(double tall_height);

/// Built-in scenario by name: "cabin", "building", "lab-1.47", "lab-1.97".  Throws std::invalid_argument otherwise.
ScenarioConfig builtin_scenario(const std::string& name);
bool is_builtin_scenario(const std::string& name);

/// Built-in name or path to a scenario file.
ScenarioConfig resolve_scenario(const std::string& name_or_path);

ScenarioConfig load_scenario(const std::filesystem::path& path);
ScenarioConfig parse_scenario(const std::string& text);
std::string format_scenario(const ScenarioConfig& config);
void save_scenario(const ScenarioConfig& config, const std::filesystem::path& path);

/// Measurement file: lines `i,j,rss_dBm`, indices 0-based with anchors first
/// and blindfolded devices after them.  Blank lines and `#` comments are
/// ignored.  The result uses library ordering and is symmetrized.
RssMatrix load_measurements(const std::filesystem::path& path, const DeviceNetwork& network);
RssMatrix parse_measurements(const std::string& text, const DeviceNetwork& network);
std::string format_measurements(const RssMatrix& rss, const DeviceNetwork& network);

/// Path-loss sample file: lines `distance_m,rss_dBm`.
std::vector<std::pair<double, double>> load_path_loss_samples(const std::filesystem::path& path);
std::vector<std::pair<double, double>> parse_path_loss_samples(const std::string& text);

}  // namespace coloc
