#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "slicevol/data/volume.hpp"

namespace slicevol::data {

struct SynthConfig {
  std::size_t n_patients = 280;
  double class_balance = 147.0 / 280.0;  // fraction of label-1 patients
  double signal = 1.0;                   // morphology gap between classes
  double noise = 0.05;                   // voxel noise standard deviation
  std::uint64_t seed = 0;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t slices = 16;

  // Throws ParameterError.
  void validate() const;
  bool operator==(const SynthConfig&) const = default;
};

// Each volume holds one to three soft ellipsoids. Label-1 blobs are stretched
// in-plane (aspect ratio x (1 + signal)) and axially (z radius x (1 + signal));
// with signal = 0 both classes share one distribution. Patient i draws from
// substream i of the seed, so output is a pure function of the config.
std::vector<MaskVolume> generate_synthetic(const SynthConfig& cfg);

}  // namespace slicevol::data
