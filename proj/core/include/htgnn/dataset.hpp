// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>

#include "htgnn/experiment.hpp"

namespace htgnn {

/// Directory layout of a dataset:
///   layout.csv                 sensor placement
///   manifest.csv               raw recordings, one case_XXX.csv each
///   processed_manifest.csv     processed series instead (duration = length)
///   preprocess.json            settings the processed series were made with
inline constexpr const char* kLayoutFile = "layout.csv";
inline constexpr const char* kManifestFile = "manifest.csv";
inline constexpr const char* kProcessedManifestFile = "processed_manifest.csv";
inline constexpr const char* kPreprocessFile = "preprocess.json";

/// Writes recordings (case id = position) with their seen/unseen split.
void write_raw_dataset(const std::filesystem::path& dir, const RigLayout& layout,
                       std::span<const CaseRecording> recordings, const SplitPlan& plan);

/// Preprocesses a raw dataset directory into `out`.
void write_processed_dataset(const std::filesystem::path& raw_dir, const std::filesystem::path& out,
                             const PreprocessConfig& cfg, const SplitPlan& plan);

/// Layout of a dataset directory; the default two-bearing rig when absent.
RigLayout read_dataset_layout(const std::filesystem::path& dir);

/// Loads a raw or processed dataset directory and applies the split of `cfg`.
/// A processed dataset must have been made with cfg.preprocess's averaging
/// and rate settings, else ConfigError.
PreparedData load_dataset(const std::filesystem::path& dir, const ExperimentConfig& cfg);

}  // namespace htgnn
