// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "htgnn/graph.hpp"
#include "htgnn/sample.hpp"

namespace htgnn {

struct OperatingCondition {
  double axial_kn = 0.0;   // F_x
  double radial_kn = 0.0;  // F_y
  double speed_rpm = 0.0;

  bool operator==(const OperatingCondition&) const = default;
};

struct GridSpec {
  std::vector<double> axial_kn{500, 1000, 1500, 2000, 2500, 3000, 3500};
  std::vector<double> radial_kn{100, 200, 300, 400};
  std::vector<double> speed_rpm{10, 20};
};

/// Cross product in axial-major, then radial, then speed order. Throws
/// ConfigError on an empty axis, a negative level or duplicate levels.
std::vector<OperatingCondition> generate_condition_grid(const GridSpec& spec);

/// Coefficients of the synthetic rig. Temperatures in deg C, loads in kN,
/// speed in r/min, vibration in arbitrary RMS units.
struct SimulatorConstants {
  double ambient_c = 25.0;
  double thermal_time_constant_s = 1800.0;
  double axial_heating = 3.3e-4;   // deg C per kN per r/min
  double radial_heating = 1.1e-3;  // deg C per kN per r/min
  double load_zone_gain = 1.0;     // extra outer-ring heating at the centre of the load zone
  double radial_load_direction_deg = 180.0;
  double inner_ring_radial_share = 0.5;
  double inner_ring_angle_ripple = 0.02;
  double downstream_bearing_gain = 0.92;  // bearings after the first
  double temperature_noise_c = 0.015;
  double temperature_resolution_c = 0.05;  // 0 disables quantization
  double vibration_speed_coeff = 0.1;
  double vibration_axial_coeff = 5e-4;
  double vibration_radial_coeff = 4e-3;
  double vibration_axial_angle_ripple = 0.1;
  double vibration_radial_floor = 0.2;
  double vibration_noise = 0.3;
  double speed_noise_rpm = 0.15;

  nlohmann::json to_json() const;
  static SimulatorConstants from_json(const nlohmann::json& j);
};

inline constexpr std::size_t kMinDurationS = 600;
inline constexpr std::size_t kMaxDurationS = 7200;

/// Raw 1 Hz recording. Channel k of `temperature` / `vibration` belongs to
/// the sensor with the same position in the matching id list.
struct CaseRecording {
  OperatingCondition condition;
  std::size_t duration = 0;
  std::vector<std::string> temperature_ids;
  std::vector<std::string> vibration_ids;
  std::vector<std::vector<double>> temperature;
  std::vector<std::vector<double>> vibration;
  std::vector<double> speed;
  std::vector<double> axial_kn;
  std::vector<double> radial_kn;
};

/// Steady-state temperature rise of one sensor above ambient. Zero for
/// vibration sensors.
double equilibrium_rise(const SensorNode& sensor, const OperatingCondition& cond, const SimulatorConstants& k);
/// Noise-free vibration RMS of one sensor. Zero for temperature sensors.
double vibration_level(const SensorNode& sensor, const OperatingCondition& cond, const SimulatorConstants& k);

/// Deterministic in `seed`. Temperatures start at ambient and follow a first-
/// order lag towards ambient + equilibrium_rise. Throws ConfigError when
/// duration is outside [600, 7200] s.
CaseRecording simulate_case(const OperatingCondition& cond, std::size_t duration, std::uint64_t seed,
                            const RigLayout& layout, const SimulatorConstants& constants);

/// Stream seed of case `index` under a master seed.
std::uint64_t case_seed(std::uint64_t master_seed, std::size_t index);

// Preprocessing.

/// Trailing mean over up to `window` samples (fewer at the start).
std::vector<double> moving_average(std::span<const double> x, std::size_t window);
/// r[k] = (x[k + span] - x[k]) / span for k in [0, n - span). Throws DataError
/// unless n > span.
std::vector<double> temperature_rate(std::span<const double> x, std::size_t span);
/// Root mean square over consecutive groups of `group` samples; a partial
/// tail group is dropped.
std::vector<double> rms_resample(std::span<const double> hf, std::size_t group);

struct PreprocessConfig {
  std::size_t moving_average_s = 60;
  std::size_t rate_span_s = 300;
  std::size_t window = 30;
  std::size_t stride = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static PreprocessConfig from_json(const nlohmann::json& j);
};

/// Model-ready channels of one case, all of equal length. Sample k
/// corresponds to raw second k + rate_span_s.
struct ProcessedCase {
  std::size_t case_id = 0;
  OperatingCondition condition;
  std::vector<std::string> temperature_ids;
  std::vector<std::string> vibration_ids;
  std::vector<std::vector<double>> temperature_rate;  // deg C per s
  std::vector<std::vector<double>> vibration;
  std::vector<double> speed;
  std::vector<double> axial_kn;
  std::vector<double> radial_kn;

  std::size_t length() const { return speed.size(); }
};

/// Moving average then rate on temperatures; the other channels drop their
/// first rate_span_s samples to stay aligned.
ProcessedCase preprocess(const CaseRecording& rec, std::size_t case_id, const PreprocessConfig& cfg);

/// End indices (inclusive) of the windows of a series of `length` samples.
/// Empty when length < window.
std::vector<std::size_t> window_ends(std::size_t length, std::size_t window, std::size_t stride);

/// Windows of a processed case with rows in the graph's node order. The target
/// is the load at each window's last sample.
std::vector<WindowSample> window_slice(const ProcessedCase& pc, const HeteroGraph& graph, std::size_t window,
                                       std::size_t stride, bool seen);

// Dataset on disk.

/// Columns: timestamp, temperature ids, vibration ids, speed, F_x, F_y.
void write_case_csv(const std::filesystem::path& path, const CaseRecording& rec);
CaseRecording read_case_csv(const std::filesystem::path& path, const RigLayout& layout,
                            const OperatingCondition& cond);

/// Columns: step, temperature ids (rate, deg C per s), vibration ids, speed, F_x, F_y.
void write_processed_csv(const std::filesystem::path& path, const ProcessedCase& pc);
ProcessedCase read_processed_csv(const std::filesystem::path& path, const RigLayout& layout, std::size_t case_id,
                                 const OperatingCondition& cond);

/// One model-ready window: rows are time steps, columns are the graph's sensor
/// ids (processed units) plus speed. Extra columns are ignored. The load is
/// left at zero.
WindowSample read_window_csv(const std::filesystem::path& path, const HeteroGraph& graph);

struct ManifestEntry {
  std::size_t case_id = 0;
  OperatingCondition condition;
  std::size_t duration = 0;
  std::string split;  // "seen" or "unseen"
  std::string file;
};

/// Columns: case_id, F_x, F_y, speed, duration, split, file.
void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

struct SimulationConfig {
  GridSpec grid;
  std::size_t duration_s = 600;
  SimulatorConstants constants;

  nlohmann::json to_json() const;
  static SimulationConfig from_json(const nlohmann::json& j);
};

/// One recording per grid condition, case i seeded with case_seed(seed, i).
std::vector<CaseRecording> simulate_dataset(const SimulationConfig& cfg, const RigLayout& layout,
                                            std::uint64_t seed);

}  // namespace htgnn
