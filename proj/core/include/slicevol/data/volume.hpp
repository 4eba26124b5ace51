#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "slicevol/autodiff/tensor.hpp"

namespace slicevol::data {

// One patient's soft lesion mask. Voxels are row-major over (H, W, S), so the
// slice index varies fastest. Label 0 = non-responder, 1 = responder.
struct MaskVolume {
  std::string patient_id;
  int label = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t slices = 0;
  std::vector<float> voxels;

  float at(std::size_t y, std::size_t x, std::size_t s) const {
    return voxels[(y * width + x) * slices + s];
  }
  float& at(std::size_t y, std::size_t x, std::size_t s) {
    return voxels[(y * width + x) * slices + s];
  }

  // Throws ContractError on a bad shape, label or voxel value.
  void validate() const;

  bool operator==(const MaskVolume&) const = default;
};

// Axial slices as [H x W x 1] tensors, in stored order.
std::vector<ad::Tensor> slice_tensors(const MaskVolume& volume);

// Appends empty slices up to `target_slices`.
MaskVolume pad_slices(const MaskVolume& volume, std::size_t target_slices);

// Volume file: 8-byte magic "SLCVVOL1", u64 LE header length, JSON header
// {shape [H, W, S], dtype "float32-le", patient_id, label, payload_bytes},
// then the raw little-endian float32 voxels.
std::string encode_volume(const MaskVolume& volume);
// Throws HeaderError, TruncationError or ShapeError on malformed input.
MaskVolume decode_volume(std::string_view bytes);

void write_volume(const std::filesystem::path& path, const MaskVolume& volume);
MaskVolume read_volume(const std::filesystem::path& path);

}  // namespace slicevol::data
