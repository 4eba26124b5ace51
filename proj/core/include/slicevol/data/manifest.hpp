#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "slicevol/data/synth.hpp"
#include "slicevol/data/volume.hpp"

namespace slicevol::data {

enum class Split { Unassigned, Train, Val, Test };

std::string_view to_string(Split split);
Split split_from_string(std::string_view name);  // ParameterError on unknown names

struct PatientEntry {
  std::string id;
  std::string path;  // relative to the manifest's directory
  int label = 0;
  Split split = Split::Unassigned;
  std::size_t original_slices = 0;  // before zero-padding to the dataset S

  bool operator==(const PatientEntry&) const = default;
};

struct DatasetManifest {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t slices = 0;
  std::optional<SynthConfig> generator;
  std::optional<std::uint64_t> split_seed;
  std::vector<PatientEntry> patients;
  std::vector<std::string> warnings;

  // Unique ids, labels in {0, 1}, one split per patient.
  void validate() const;
  std::vector<std::size_t> indices(Split split) const;

  bool operator==(const DatasetManifest&) const = default;
};

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(std::string_view text);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

struct SplitFractions {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

// Stratified by label: split sizes follow the fractions (largest remainder)
// and each split's class mix stays within one patient of the global ratio.
// A split left without both classes is reported in `warnings`.
DatasetManifest split_dataset(DatasetManifest manifest, const SplitFractions& fractions,
                              std::uint64_t seed);

// Writes every volume (zero-padded to the longest S) under `dir` and returns
// the unsplit manifest; the caller writes it after splitting.
DatasetManifest write_volumes(const std::vector<MaskVolume>& volumes,
                              const std::filesystem::path& dir,
                              const std::optional<SynthConfig>& generator);

std::vector<MaskVolume> load_split(const DatasetManifest& manifest,
                                   const std::filesystem::path& manifest_dir, Split split);

}  // namespace slicevol::data
