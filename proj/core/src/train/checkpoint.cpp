#include "slicevol/train/checkpoint.hpp"

#include "io/blob_file.hpp"
#include "json_config.hpp"
#include "slicevol/errors.hpp"

namespace slicevol::train {

namespace {

constexpr std::string_view kMagic = "SLCVCKPT";

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::vector<double> blob;
  nlohmann::json manifest = nlohmann::json::array();
  for_each_param(ckpt.params, [&](const std::string& name, const ad::Tensor& t) {
    manifest.push_back({{"name", name}, {"shape", t.shape()}, {"trainable", t.requires_grad()}});
    blob.insert(blob.end(), t.data().begin(), t.data().end());
  });
  const std::string payload = io::encode_f64le(blob);
  const nlohmann::json header = {{"model", config::to_json(ckpt.model)},
                                 {"train", config::to_json(ckpt.train)},
                                 {"epoch", ckpt.epoch},
                                 {"metric", ckpt.metric},
                                 {"manifest", manifest},
                                 {"dtype", "float64-le"},
                                 {"payload_bytes", payload.size()}};
  return io::pack(kMagic, header.dump(), payload);
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  const io::Unpacked raw = io::unpack(bytes, kMagic, "checkpoint");
  Checkpoint ckpt;
  nlohmann::json manifest;
  std::size_t payload_bytes = 0;
  try {
    const nlohmann::json h = nlohmann::json::parse(raw.header);
    ckpt.model = config::model_from_json(h.at("model"));
    ckpt.train = config::train_from_json(h.at("train"));
    ckpt.epoch = h.at("epoch").get<std::size_t>();
    ckpt.metric = h.at("metric").get<double>();
    manifest = h.at("manifest");
    payload_bytes = h.at("payload_bytes").get<std::size_t>();
    if (h.at("dtype") != "float64-le") throw HeaderError("checkpoint dtype must be float64-le");
  } catch (const nlohmann::json::exception& e) {
    throw HeaderError(std::string("checkpoint header: ") + e.what());
  } catch (const ParameterError& e) {
    throw HeaderError(std::string("checkpoint header: ") + e.what());
  }
  if (raw.payload.size() < payload_bytes) throw TruncationError("checkpoint payload is truncated");
  if (raw.payload.size() > payload_bytes) throw ShapeError("checkpoint has trailing bytes");
  const std::vector<double> blob = io::decode_f64le(raw.payload);

  // The architecture fixes names, shapes and the frozen/trainable split; the
  // initial values are overwritten below.
  ckpt.params = init_model(ckpt.model, 0);
  std::size_t index = 0, offset = 0;
  ckpt.params.visit([&](const std::string& name, ad::Tensor& t) {
    if (index >= manifest.size()) throw ShapeError("checkpoint manifest is missing " + name);
    const nlohmann::json& entry = manifest[index++];
    if (entry.at("name") != name || entry.at("shape").get<ad::Shape>() != t.shape() ||
        entry.at("trainable").get<bool>() != t.requires_grad()) {
      throw ShapeError("checkpoint manifest disagrees with the architecture at " + name);
    }
    const std::size_t n = t.numel();
    if (offset + n > blob.size()) throw ShapeError("checkpoint payload is shorter than its manifest");
    t = ad::Tensor(t.shape(), std::vector<double>(blob.begin() + static_cast<std::ptrdiff_t>(offset),
                                                  blob.begin() + static_cast<std::ptrdiff_t>(offset + n)),
                   t.requires_grad());
    offset += n;
  });
  if (index != manifest.size() || offset != blob.size()) {
    throw ShapeError("checkpoint holds parameters the architecture does not have");
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  io::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path));
}

}  // namespace slicevol::train
