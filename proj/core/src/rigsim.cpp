// SPDX-License-Identifier: Apache-2.0
#include "htgnn/rigsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "htgnn/csv.hpp"
#include "htgnn/json_fields.hpp"

namespace htgnn {

namespace {

double cos_deg(double deg) { return std::cos(deg * std::numbers::pi / 180.0); }

double bearing_gain(const SensorNode& s, const SimulatorConstants& k) {
  return s.bearing <= 1 ? 1.0 : k.downstream_bearing_gain;
}

void check_axis(const std::vector<double>& levels, const char* name) {
  if (levels.empty()) throw ConfigError(std::string("condition grid: empty ") + name + " axis");
  std::set<double> distinct;
  for (double v : levels) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string("condition grid: negative ") + name);
    if (!distinct.insert(v).second) throw ConfigError(std::string("condition grid: duplicate ") + name + " level");
  }
}

}  // namespace

std::vector<OperatingCondition> generate_condition_grid(const GridSpec& spec) {
  check_axis(spec.axial_kn, "axial");
  check_axis(spec.radial_kn, "radial");
  check_axis(spec.speed_rpm, "speed");
  std::vector<OperatingCondition> out;
  for (double fx : spec.axial_kn) {
    for (double fy : spec.radial_kn) {
      for (double w : spec.speed_rpm) out.push_back({fx, fy, w});
    }
  }
  return out;
}

// ---------------------------------------------------------------- constants

nlohmann::json SimulatorConstants::to_json() const {
  return {{"ambient_c", ambient_c},
          {"thermal_time_constant_s", thermal_time_constant_s},
          {"axial_heating", axial_heating},
          {"radial_heating", radial_heating},
          {"load_zone_gain", load_zone_gain},
          {"radial_load_direction_deg", radial_load_direction_deg},
          {"inner_ring_radial_share", inner_ring_radial_share},
          {"inner_ring_angle_ripple", inner_ring_angle_ripple},
          {"downstream_bearing_gain", downstream_bearing_gain},
          {"temperature_noise_c", temperature_noise_c},
          {"temperature_resolution_c", temperature_resolution_c},
          {"vibration_speed_coeff", vibration_speed_coeff},
          {"vibration_axial_coeff", vibration_axial_coeff},
          {"vibration_radial_coeff", vibration_radial_coeff},
          {"vibration_axial_angle_ripple", vibration_axial_angle_ripple},
          {"vibration_radial_floor", vibration_radial_floor},
          {"vibration_noise", vibration_noise},
          {"speed_noise_rpm", speed_noise_rpm}};
}

SimulatorConstants SimulatorConstants::from_json(const nlohmann::json& j) {
  constexpr std::string_view section = "simulator.constants";
  SimulatorConstants k;
  const auto defaults = k.to_json();
  if (!j.is_object()) throw ConfigError("simulator.constants: expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw ConfigError("simulator.constants: unknown key '" + key + "'");
  }
  json_fields::read(j, "ambient_c", k.ambient_c, section);
  json_fields::read(j, "thermal_time_constant_s", k.thermal_time_constant_s, section);
  json_fields::read(j, "axial_heating", k.axial_heating, section);
  json_fields::read(j, "radial_heating", k.radial_heating, section);
  json_fields::read(j, "load_zone_gain", k.load_zone_gain, section);
  json_fields::read(j, "radial_load_direction_deg", k.radial_load_direction_deg, section);
  json_fields::read(j, "inner_ring_radial_share", k.inner_ring_radial_share, section);
  json_fields::read(j, "inner_ring_angle_ripple", k.inner_ring_angle_ripple, section);
  json_fields::read(j, "downstream_bearing_gain", k.downstream_bearing_gain, section);
  json_fields::read(j, "temperature_noise_c", k.temperature_noise_c, section);
  json_fields::read(j, "temperature_resolution_c", k.temperature_resolution_c, section);
  json_fields::read(j, "vibration_speed_coeff", k.vibration_speed_coeff, section);
  json_fields::read(j, "vibration_axial_coeff", k.vibration_axial_coeff, section);
  json_fields::read(j, "vibration_radial_coeff", k.vibration_radial_coeff, section);
  json_fields::read(j, "vibration_axial_angle_ripple", k.vibration_axial_angle_ripple, section);
  json_fields::read(j, "vibration_radial_floor", k.vibration_radial_floor, section);
  json_fields::read(j, "vibration_noise", k.vibration_noise, section);
  json_fields::read(j, "speed_noise_rpm", k.speed_noise_rpm, section);
  if (!(k.thermal_time_constant_s > 0.0)) throw ConfigError("thermal time constant must be positive");
  if (k.temperature_noise_c < 0.0 || k.vibration_noise < 0.0 || k.speed_noise_rpm < 0.0 ||
      k.temperature_resolution_c < 0.0) {
    throw ConfigError("simulator noise levels must be non-negative");
  }
  return k;
}

// ---------------------------------------------------------------- generative rules

double equilibrium_rise(const SensorNode& s, const OperatingCondition& c, const SimulatorConstants& k) {
  const double offset = cos_deg(s.angle_deg - k.radial_load_direction_deg);
  double radial_weight = 0.0;
  switch (s.subtype) {
    case Subtype::OuterRing:
      radial_weight = 1.0 + k.load_zone_gain * std::max(0.0, offset);
      break;
    case Subtype::InnerRing:
      // The rotating inner ring sees the load zone on every revolution.
      radial_weight = k.inner_ring_radial_share * (1.0 + k.inner_ring_angle_ripple * offset);
      break;
    default:
      return 0.0;
  }
  return bearing_gain(s, k) * c.speed_rpm * (k.axial_heating * c.axial_kn + k.radial_heating * c.radial_kn * radial_weight);
}

double vibration_level(const SensorNode& s, const OperatingCondition& c, const SimulatorConstants& k) {
  const double offset = cos_deg(s.angle_deg - k.radial_load_direction_deg);
  double projected = 0.0;
  switch (s.subtype) {
    case Subtype::Axial:
      projected = k.vibration_axial_coeff * c.axial_kn * (1.0 + k.vibration_axial_angle_ripple * offset);
      break;
    case Subtype::Radial:
      projected = k.vibration_radial_coeff * c.radial_kn *
                  (k.vibration_radial_floor + (1.0 - k.vibration_radial_floor) * std::max(0.0, offset));
      break;
    default:
      return 0.0;
  }
  return k.vibration_speed_coeff * c.speed_rpm + bearing_gain(s, k) * projected;
}

std::uint64_t case_seed(std::uint64_t master_seed, std::size_t index) {
  // splitmix64 finalizer over the combined key.
  std::uint64_t z = master_seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

CaseRecording simulate_case(const OperatingCondition& cond, std::size_t duration, std::uint64_t seed,
                            const RigLayout& layout, const SimulatorConstants& k) {
  if (duration < kMinDurationS || duration > kMaxDurationS) {
    throw ConfigError("case duration " + std::to_string(duration) + " s outside [" +
                      std::to_string(kMinDurationS) + ", " + std::to_string(kMaxDurationS) + "]");
  }
  if (cond.axial_kn < 0.0 || cond.radial_kn < 0.0 || cond.speed_rpm < 0.0) {
    throw ConfigError("operating condition with negative load or speed");
  }
  layout.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  CaseRecording rec;
  rec.condition = cond;
  rec.duration = duration;
  const double decay = std::exp(-1.0 / k.thermal_time_constant_s);
  for (const auto& s : layout.sensors) {
    if (s.meta() != MetaType::Temperature) continue;
    rec.temperature_ids.push_back(s.id);
    const double target = k.ambient_c + equilibrium_rise(s, cond, k);
    std::vector<double> series(duration);
    double state = k.ambient_c;
    for (std::size_t t = 0; t < duration; ++t) {
      double measured = state + k.temperature_noise_c * unit(rng);
      if (k.temperature_resolution_c > 0.0) {
        measured = std::round(measured / k.temperature_resolution_c) * k.temperature_resolution_c;
      }
      series[t] = measured;
      state = target + (state - target) * decay;
    }
    rec.temperature.push_back(std::move(series));
  }
  for (const auto& s : layout.sensors) {
    if (s.meta() != MetaType::Vibration) continue;
    rec.vibration_ids.push_back(s.id);
    const double level = vibration_level(s, cond, k);
    std::vector<double> series(duration);
    for (auto& v : series) v = std::abs(level + k.vibration_noise * unit(rng));
    rec.vibration.push_back(std::move(series));
  }
  rec.speed.resize(duration);
  for (auto& w : rec.speed) w = std::max(0.0, cond.speed_rpm + k.speed_noise_rpm * unit(rng));
  rec.axial_kn.assign(duration, cond.axial_kn);
  rec.radial_kn.assign(duration, cond.radial_kn);
  return rec;
}

// ---------------------------------------------------------------- preprocessing

std::vector<double> moving_average(std::span<const double> x, std::size_t window) {
  if (window == 0) throw ConfigError("moving average window must be positive");
  std::vector<double> out(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    const std::size_t from = t + 1 >= window ? t + 1 - window : 0;
    double acc = 0.0;
    for (std::size_t i = from; i <= t; ++i) acc += x[i];
    out[t] = acc / static_cast<double>(t + 1 - from);
  }
  return out;
}

std::vector<double> temperature_rate(std::span<const double> x, std::size_t span) {
  if (span == 0) throw ConfigError("rate span must be positive");
  if (x.size() <= span) {
    throw DataError("series of " + std::to_string(x.size()) + " samples too short for a " +
                    std::to_string(span) + " s rate");
  }
  std::vector<double> out(x.size() - span);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = (x[k + span] - x[k]) / static_cast<double>(span);
  return out;
}

std::vector<double> rms_resample(std::span<const double> hf, std::size_t group) {
  if (group == 0) throw ConfigError("RMS group size must be positive");
  std::vector<double> out(hf.size() / group);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < group; ++i) s += hf[k * group + i] * hf[k * group + i];
    out[k] = std::sqrt(s / static_cast<double>(group));
  }
  return out;
}

void PreprocessConfig::validate() const {
  if (moving_average_s == 0 || rate_span_s == 0 || window == 0 || stride == 0) {
    throw ConfigError("preprocess parameters must be positive");
  }
}

nlohmann::json PreprocessConfig::to_json() const {
  return {{"moving_average_s", moving_average_s}, {"rate_span_s", rate_span_s}, {"window", window}, {"stride", stride}};
}

PreprocessConfig PreprocessConfig::from_json(const nlohmann::json& j) {
  constexpr std::string_view section = "preprocess";
  json_fields::require_known(j, {"moving_average_s", "rate_span_s", "window", "stride"}, section);
  PreprocessConfig c;
  json_fields::read(j, "moving_average_s", c.moving_average_s, section);
  json_fields::read(j, "rate_span_s", c.rate_span_s, section);
  json_fields::read(j, "window", c.window, section);
  json_fields::read(j, "stride", c.stride, section);
  c.validate();
  return c;
}

ProcessedCase preprocess(const CaseRecording& rec, std::size_t case_id, const PreprocessConfig& cfg) {
  cfg.validate();
  const std::size_t n = rec.speed.size(), span = cfg.rate_span_s;
  if (n <= span) {
    throw DataError("case " + std::to_string(case_id) + " has " + std::to_string(n) + " samples, needs more than " +
                    std::to_string(span));
  }
  auto tail = [&](const std::vector<double>& v) {
    if (v.size() != n) throw DataError("case " + std::to_string(case_id) + " has channels of unequal length");
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(span), v.end());
  };
  ProcessedCase pc;
  pc.case_id = case_id;
  pc.condition = rec.condition;
  pc.temperature_ids = rec.temperature_ids;
  pc.vibration_ids = rec.vibration_ids;
  for (const auto& t : rec.temperature) {
    if (t.size() != n) throw DataError("case " + std::to_string(case_id) + " has channels of unequal length");
    pc.temperature_rate.push_back(temperature_rate(moving_average(t, cfg.moving_average_s), span));
  }
  for (const auto& v : rec.vibration) pc.vibration.push_back(tail(v));
  pc.speed = tail(rec.speed);
  pc.axial_kn = tail(rec.axial_kn);
  pc.radial_kn = tail(rec.radial_kn);
  return pc;
}

std::vector<std::size_t> window_ends(std::size_t length, std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0) throw ConfigError("window and stride must be positive");
  std::vector<std::size_t> out;
  for (std::size_t end = window - 1; end < length; end += stride) out.push_back(end);
  return out;
}

std::vector<WindowSample> window_slice(const ProcessedCase& pc, const HeteroGraph& graph, std::size_t window,
                                       std::size_t stride, bool seen) {
  auto channel_rows = [&](MetaType m, const std::vector<std::string>& ids) {
    std::vector<std::size_t> rows;
    for (const auto& node : graph.nodes(m)) {
      auto it = std::find(ids.begin(), ids.end(), node.id);
      if (it == ids.end()) throw DataError("case " + std::to_string(pc.case_id) + " lacks channel " + node.id);
      rows.push_back(static_cast<std::size_t>(it - ids.begin()));
    }
    return rows;
  };
  const auto t_rows = channel_rows(MetaType::Temperature, pc.temperature_ids);
  const auto v_rows = channel_rows(MetaType::Vibration, pc.vibration_ids);
  std::vector<WindowSample> out;
  for (auto end : window_ends(pc.length(), window, stride)) {
    const std::size_t begin = end + 1 - window;
    WindowSample s;
    s.window = window;
    s.temperature_nodes = t_rows.size();
    s.vibration_nodes = v_rows.size();
    for (auto r : t_rows) {
      const auto& src = pc.temperature_rate[r];
      s.temperature.insert(s.temperature.end(), src.begin() + begin, src.begin() + end + 1);
    }
    for (auto r : v_rows) {
      const auto& src = pc.vibration[r];
      s.vibration.insert(s.vibration.end(), src.begin() + begin, src.begin() + end + 1);
    }
    s.speed.assign(pc.speed.begin() + begin, pc.speed.begin() + end + 1);
    s.load = {pc.axial_kn[end], pc.radial_kn[end]};
    s.case_id = pc.case_id;
    s.end_index = end;
    s.seen = seen;
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------- files

void write_case_csv(const std::filesystem::path& path, const CaseRecording& rec) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "timestamp";
  for (const auto& id : rec.temperature_ids) out << ',' << id;
  for (const auto& id : rec.vibration_ids) out << ',' << id;
  out << ",speed,F_x,F_y\n";
  for (std::size_t t = 0; t < rec.speed.size(); ++t) {
    out << t;
    for (const auto& ch : rec.temperature) out << ',' << csv::format(ch[t]);
    for (const auto& ch : rec.vibration) out << ',' << csv::format(ch[t]);
    out << ',' << csv::format(rec.speed[t]) << ',' << csv::format(rec.axial_kn[t]) << ','
        << csv::format(rec.radial_kn[t]) << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

CaseRecording read_case_csv(const std::filesystem::path& path, const RigLayout& layout,
                            const OperatingCondition& cond) {
  const auto table = csv::read(path);
  CaseRecording rec;
  rec.condition = cond;
  rec.duration = table.rows.size();
  auto column = [&](std::size_t c) {
    std::vector<double> v;
    v.reserve(table.rows.size());
    for (const auto& row : table.rows) v.push_back(csv::to_double(row[c]));
    return v;
  };
  for (const auto& s : layout.sensors) {
    const auto c = table.column(s.id);
    if (s.meta() == MetaType::Temperature) {
      rec.temperature_ids.push_back(s.id);
      rec.temperature.push_back(column(c));
    } else {
      rec.vibration_ids.push_back(s.id);
      rec.vibration.push_back(column(c));
    }
  }
  rec.speed = column(table.column("speed"));
  rec.axial_kn = column(table.column("F_x"));
  rec.radial_kn = column(table.column("F_y"));
  return rec;
}

void write_processed_csv(const std::filesystem::path& path, const ProcessedCase& pc) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "step";
  for (const auto& id : pc.temperature_ids) out << ',' << id;
  for (const auto& id : pc.vibration_ids) out << ',' << id;
  out << ",speed,F_x,F_y\n";
  for (std::size_t t = 0; t < pc.length(); ++t) {
    out << t;
    for (const auto& ch : pc.temperature_rate) out << ',' << csv::format(ch[t]);
    for (const auto& ch : pc.vibration) out << ',' << csv::format(ch[t]);
    out << ',' << csv::format(pc.speed[t]) << ',' << csv::format(pc.axial_kn[t]) << ','
        << csv::format(pc.radial_kn[t]) << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

ProcessedCase read_processed_csv(const std::filesystem::path& path, const RigLayout& layout, std::size_t case_id,
                                 const OperatingCondition& cond) {
  // Same column layout as a raw recording, so reuse its reader.
  auto rec = read_case_csv(path, layout, cond);
  ProcessedCase pc;
  pc.case_id = case_id;
  pc.condition = cond;
  pc.temperature_ids = std::move(rec.temperature_ids);
  pc.vibration_ids = std::move(rec.vibration_ids);
  pc.temperature_rate = std::move(rec.temperature);
  pc.vibration = std::move(rec.vibration);
  pc.speed = std::move(rec.speed);
  pc.axial_kn = std::move(rec.axial_kn);
  pc.radial_kn = std::move(rec.radial_kn);
  return pc;
}

WindowSample read_window_csv(const std::filesystem::path& path, const HeteroGraph& graph) {
  const auto table = csv::read(path);
  if (table.rows.empty()) throw DataError(path.string() + ": window has no rows");
  WindowSample w;
  w.window = table.rows.size();
  w.temperature_nodes = graph.num_nodes(MetaType::Temperature);
  w.vibration_nodes = graph.num_nodes(MetaType::Vibration);
  auto append = [&](std::size_t c, std::vector<double>& dst) {
    for (const auto& row : table.rows) dst.push_back(csv::to_double(row.at(c)));
  };
  for (const auto& n : graph.nodes(MetaType::Temperature)) append(table.column(n.id), w.temperature);
  for (const auto& n : graph.nodes(MetaType::Vibration)) append(table.column(n.id), w.vibration);
  append(table.column("speed"), w.speed);
  w.validate();
  return w;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "case_id,F_x,F_y,speed,duration,split,file\n";
  for (const auto& e : entries) {
    out << e.case_id << ',' << csv::format(e.condition.axial_kn) << ',' << csv::format(e.condition.radial_kn) << ','
        << csv::format(e.condition.speed_rpm) << ',' << e.duration << ',' << e.split << ',' << e.file << '\n';
  }
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const auto c_id = table.column("case_id"), c_fx = table.column("F_x"), c_fy = table.column("F_y"),
             c_w = table.column("speed"), c_d = table.column("duration"), c_split = table.column("split"),
             c_file = table.column("file");
  std::vector<ManifestEntry> out;
  for (const auto& row : table.rows) {
    ManifestEntry e;
    e.case_id = static_cast<std::size_t>(csv::to_long(row[c_id]));
    e.condition = {csv::to_double(row[c_fx]), csv::to_double(row[c_fy]), csv::to_double(row[c_w])};
    e.duration = static_cast<std::size_t>(csv::to_long(row[c_d]));
    e.split = row[c_split];
    e.file = row[c_file];
    if (e.split != "seen" && e.split != "unseen") throw DataError("manifest split must be seen or unseen, got " + e.split);
    out.push_back(std::move(e));
  }
  return out;
}

nlohmann::json SimulationConfig::to_json() const {
  return {{"grid", {{"axial_kn", grid.axial_kn}, {"radial_kn", grid.radial_kn}, {"speed_rpm", grid.speed_rpm}}},
          {"duration_s", duration_s},
          {"constants", constants.to_json()}};
}

SimulationConfig SimulationConfig::from_json(const nlohmann::json& j) {
  constexpr std::string_view section = "simulator";
  json_fields::require_known(j, {"grid", "duration_s", "constants"}, section);
  SimulationConfig c;
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    json_fields::require_known(g, {"axial_kn", "radial_kn", "speed_rpm"}, "simulator.grid");
    json_fields::read(g, "axial_kn", c.grid.axial_kn, "simulator.grid");
    json_fields::read(g, "radial_kn", c.grid.radial_kn, "simulator.grid");
    json_fields::read(g, "speed_rpm", c.grid.speed_rpm, "simulator.grid");
  }
  json_fields::read(j, "duration_s", c.duration_s, section);
  if (j.contains("constants")) c.constants = SimulatorConstants::from_json(j.at("constants"));
  if (c.duration_s < kMinDurationS || c.duration_s > kMaxDurationS) {
    throw ConfigError("simulator.duration_s must lie in [600, 7200]");
  }
  return c;
}

std::vector<CaseRecording> simulate_dataset(const SimulationConfig& cfg, const RigLayout& layout,
                                            std::uint64_t seed) {
  const auto grid = generate_condition_grid(cfg.grid);
  std::vector<CaseRecording> out;
  out.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.push_back(simulate_case(grid[i], cfg.duration_s, case_seed(seed, i), layout, cfg.constants));
  }
  return out;
}

}  // namespace htgnn
