#include "slicevol/data/volume.hpp"

#include <cmath>
#include <json.hpp>

#include "io/blob_file.hpp"
#include "slicevol/errors.hpp"

namespace slicevol::data {

namespace {

constexpr std::string_view kVolumeMagic = "SLCVVOL1";

}  // namespace

void MaskVolume::validate() const {
  if (height == 0 || width == 0 || slices == 0) throw ContractError("volume has an empty axis");
  if (voxels.size() != height * width * slices) {
    throw ContractError("volume " + patient_id + ": voxel count does not match its shape");
  }
  if (label != 0 && label != 1) throw ContractError("volume " + patient_id + ": label must be 0 or 1");
  for (float v : voxels) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw ContractError("volume " + patient_id + ": voxel outside [0, 1]");
    }
  }
}

std::vector<ad::Tensor> slice_tensors(const MaskVolume& volume) {
  std::vector<ad::Tensor> out;
  out.reserve(volume.slices);
  const std::size_t plane = volume.height * volume.width;
  for (std::size_t s = 0; s < volume.slices; ++s) {
    std::vector<double> values(plane);
    for (std::size_t i = 0; i < plane; ++i) values[i] = volume.voxels[i * volume.slices + s];
    out.emplace_back(ad::Shape{volume.height, volume.width, 1}, std::move(values));
  }
  return out;
}

MaskVolume pad_slices(const MaskVolume& volume, std::size_t target_slices) {
  if (target_slices < volume.slices) {
    throw CapacityError("volume " + volume.patient_id + " has more slices than the target");
  }
  MaskVolume out = volume;
  out.slices = target_slices;
  out.voxels.assign(volume.height * volume.width * target_slices, 0.0f);
  for (std::size_t i = 0; i < volume.height * volume.width; ++i) {
    for (std::size_t s = 0; s < volume.slices; ++s) {
      out.voxels[i * target_slices + s] = volume.voxels[i * volume.slices + s];
    }
  }
  return out;
}

std::string encode_volume(const MaskVolume& volume) {
  volume.validate();
  const std::string payload = io::encode_f32le(volume.voxels);
  const nlohmann::json header = {
      {"shape", {volume.height, volume.width, volume.slices}},
      {"dtype", "float32-le"},
      {"patient_id", volume.patient_id},
      {"label", volume.label},
      {"payload_bytes", payload.size()},
  };
  return io::pack(kVolumeMagic, header.dump(), payload);
}

MaskVolume decode_volume(std::string_view bytes) {
  const io::Unpacked parts = io::unpack(bytes, kVolumeMagic, "volume");
  nlohmann::json header;
  MaskVolume v;
  std::size_t payload_bytes = 0;
  try {
    header = nlohmann::json::parse(parts.header);
    const auto shape = header.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 3) throw HeaderError("volume header: shape must have three axes");
    if (header.at("dtype").get<std::string>() != "float32-le") {
      throw HeaderError("volume header: unsupported dtype");
    }
    v.height = shape[0];
    v.width = shape[1];
    v.slices = shape[2];
    v.patient_id = header.at("patient_id").get<std::string>();
    v.label = header.at("label").get<int>();
    payload_bytes = header.at("payload_bytes").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw HeaderError(std::string("volume header: ") + e.what());
  }
  if (parts.payload.size() < payload_bytes) {
    throw TruncationError("volume " + v.patient_id + ": payload holds " +
                          std::to_string(parts.payload.size()) + " of " +
                          std::to_string(payload_bytes) + " bytes");
  }
  if (parts.payload.size() > payload_bytes) {
    throw ShapeError("volume " + v.patient_id + ": trailing bytes after payload");
  }
  if (payload_bytes != v.height * v.width * v.slices * sizeof(float)) {
    throw ShapeError("volume " + v.patient_id + ": header shape does not match payload length");
  }
  v.voxels = io::decode_f32le(parts.payload);
  try {
    v.validate();
  } catch (const ContractError& e) {
    throw DecodeError(e.what());
  }
  return v;
}

void write_volume(const std::filesystem::path& path, const MaskVolume& volume) {
  io::write_file(path, encode_volume(volume));
}

MaskVolume read_volume(const std::filesystem::path& path) {
  return decode_volume(io::read_file(path));
}

}  // namespace slicevol::data
