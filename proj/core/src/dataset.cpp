// SPDX-License-Identifier: Apache-2.0
#include "htgnn/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace htgnn {

namespace {

std::string case_file(std::size_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "case_%03zu.csv", id);
  return buf;
}

ManifestEntry entry_for(std::size_t id, const OperatingCondition& cond, std::size_t length, const SplitPlan& plan) {
  return {id, cond, length, plan.is_unseen(id) ? "unseen" : "seen", case_file(id)};
}

void require_ids(std::span<const ManifestEntry> entries, const std::filesystem::path& path) {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].case_id != i) throw DataError(path.string() + ": case ids must run 0..n-1 in order");
  }
}

}  // namespace

void write_raw_dataset(const std::filesystem::path& dir, const RigLayout& layout,
                       std::span<const CaseRecording> recordings, const SplitPlan& plan) {
  std::filesystem::create_directories(dir);
  layout.write_csv(dir / kLayoutFile);
  std::vector<ManifestEntry> entries;
  for (std::size_t id = 0; id < recordings.size(); ++id) {
    const auto& rec = recordings[id];
    write_case_csv(dir / case_file(id), rec);
    entries.push_back(entry_for(id, rec.condition, rec.duration, plan));
  }
  write_manifest(dir / kManifestFile, entries);
}

void write_processed_dataset(const std::filesystem::path& raw_dir, const std::filesystem::path& out,
                             const PreprocessConfig& cfg, const SplitPlan& plan) {
  cfg.validate();
  const auto layout = read_dataset_layout(raw_dir);
  const auto manifest = read_manifest(raw_dir / kManifestFile);
  require_ids(manifest, raw_dir / kManifestFile);
  std::filesystem::create_directories(out);
  layout.write_csv(out / kLayoutFile);
  std::vector<ManifestEntry> entries;
  for (const auto& e : manifest) {
    const auto pc = preprocess(read_case_csv(raw_dir / e.file, layout, e.condition), e.case_id, cfg);
    write_processed_csv(out / case_file(e.case_id), pc);
    entries.push_back(entry_for(e.case_id, e.condition, pc.length(), plan));
  }
  write_manifest(out / kProcessedManifestFile, entries);
  std::ofstream(out / kPreprocessFile) << cfg.to_json().dump(2) << '\n';
}

RigLayout read_dataset_layout(const std::filesystem::path& dir) {
  const auto path = dir / kLayoutFile;
  return std::filesystem::exists(path) ? RigLayout::read_csv(path) : RigLayout::two_bearing_default();
}

PreparedData load_dataset(const std::filesystem::path& dir, const ExperimentConfig& cfg) {
  const auto layout = read_dataset_layout(dir);
  if (std::filesystem::exists(dir / kProcessedManifestFile)) {
    std::ifstream in(dir / kPreprocessFile);
    if (!in) throw DataError("processed dataset " + dir.string() + " lacks " + kPreprocessFile);
    const auto made = PreprocessConfig::from_json(nlohmann::json::parse(in));
    if (made.moving_average_s != cfg.preprocess.moving_average_s || made.rate_span_s != cfg.preprocess.rate_span_s) {
      throw ConfigError("processed dataset " + dir.string() +
                        " was made with different moving_average_s / rate_span_s than the config");
    }
    const auto manifest = read_manifest(dir / kProcessedManifestFile);
    require_ids(manifest, dir / kProcessedManifestFile);
    std::vector<ProcessedCase> cases;
    for (const auto& e : manifest) cases.push_back(read_processed_csv(dir / e.file, layout, e.case_id, e.condition));
    return prepare_processed(cfg, layout, cases);
  }
  if (!std::filesystem::exists(dir / kManifestFile)) {
    throw DataError(dir.string() + " has neither " + kManifestFile + " nor " + kProcessedManifestFile);
  }
  const auto manifest = read_manifest(dir / kManifestFile);
  require_ids(manifest, dir / kManifestFile);
  std::vector<CaseRecording> recordings;
  for (const auto& e : manifest) recordings.push_back(read_case_csv(dir / e.file, layout, e.condition));
  return prepare_data(cfg, layout, recordings);
}

}  // namespace htgnn
