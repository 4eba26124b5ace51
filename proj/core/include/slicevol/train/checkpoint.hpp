#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "slicevol/model.hpp"
#include "slicevol/train/trainer.hpp"

namespace slicevol::train {

struct Checkpoint {
  ModelConfig model;
  TrainConfig train;
  std::size_t epoch = 0;
  double metric = 0.0;  // validation F1 at that epoch
  ModelParams params;
};

// 8-byte magic "SLCVCKPT", u64 LE header length, JSON header {model, train,
// epoch, metric, manifest [{name, shape, trainable}], payload_bytes}, then every
// parameter as little-endian float64 in manifest order.
std::string encode_checkpoint(const Checkpoint& ckpt);
// Throws a DecodeError subclass on a malformed file or one whose manifest
// does not match the architecture its header describes.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace slicevol::train
