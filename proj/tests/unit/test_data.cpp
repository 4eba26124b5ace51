#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "slicevol/config_io.hpp"
#include "slicevol/data/manifest.hpp"
#include "slicevol/data/synth.hpp"
#include "slicevol/data/volume.hpp"
#include "slicevol/errors.hpp"
#include "test_support.hpp"

using namespace slicevol;
using namespace slicevol::data;
namespace fs = std::filesystem;

namespace {

std::string frame(std::string_view header, std::string_view payload) {
  std::string out = "SLCVVOL1";
  std::uint64_t n = header.size();
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((n >> (8 * i)) & 0xff));
  out += header;
  out += payload;
  return out;
}

MaskVolume tiny_volume() {
  Rng rng(1);
  return slicevol::testing::random_volume(3, 2, 1, rng, "T001");
}

fs::path scratch_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

DatasetManifest labelled_manifest(std::size_t n_pos, std::size_t n_neg) {
  DatasetManifest m;
  m.height = m.width = 8;
  m.slices = 4;
  for (std::size_t i = 0; i < n_pos + n_neg; ++i) {
    m.patients.push_back({"P" + std::to_string(i), "volumes/P" + std::to_string(i) + ".svol",
                          i < n_pos ? 1 : 0, Split::Unassigned, 4});
  }
  return m;
}

}  // namespace

TEST(VolumeFile, RoundTripIsBitwise) {
  const MaskVolume v = tiny_volume();
  const std::string bytes = encode_volume(v);
  const MaskVolume back = decode_volume(bytes);
  EXPECT_EQ(back, v);
  EXPECT_EQ(encode_volume(back), bytes);

  const fs::path dir = scratch_dir("slicevol_volume_test");
  write_volume(dir / "v.svol", v);
  EXPECT_EQ(read_volume(dir / "v.svol"), v);
  fs::remove_all(dir);
}

TEST(VolumeFile, DistinctDecodeErrors) {
  const std::string bytes = encode_volume(tiny_volume());
  EXPECT_THROW(decode_volume(bytes.substr(0, bytes.size() - 3)), TruncationError);
  EXPECT_THROW(decode_volume(bytes.substr(0, 12)), TruncationError);
  std::string magic = bytes;
  magic[3] = 'Z';
  EXPECT_THROW(decode_volume(magic), HeaderError);
  EXPECT_THROW(decode_volume(frame("{not json", "")), HeaderError);

  const std::string payload(3 * 3 * 2 * 4, '\0');
  const std::string ok = R"({"shape":[3,3,2],"dtype":"float32-le","patient_id":"x","label":0,"payload_bytes":72})";
  EXPECT_NO_THROW(decode_volume(frame(ok, payload)));
  const std::string wrong_shape =
      R"({"shape":[3,3,3],"dtype":"float32-le","patient_id":"x","label":0,"payload_bytes":72})";
  EXPECT_THROW(decode_volume(frame(wrong_shape, payload)), ShapeError);
  EXPECT_THROW(decode_volume(frame(ok, payload + "abcd")), ShapeError);
  const std::string f64 = R"({"shape":[3,3,2],"dtype":"float64-le","patient_id":"x","label":0,"payload_bytes":72})";
  EXPECT_THROW(decode_volume(frame(f64, payload)), HeaderError);
}

TEST(VolumeFile, SlicesAndPadding) {
  const MaskVolume v = tiny_volume();
  const auto slices = slice_tensors(v);
  ASSERT_EQ(slices.size(), 2u);
  EXPECT_EQ(slices[1].shape(), (ad::Shape{3, 3, 1}));
  EXPECT_EQ(slices[1][4], static_cast<double>(v.at(1, 1, 1)));
  const MaskVolume padded = pad_slices(v, 5);
  EXPECT_EQ(padded.slices, 5u);
  EXPECT_EQ(padded.at(2, 1, 1), v.at(2, 1, 1));
  EXPECT_EQ(padded.at(2, 1, 4), 0.0f);
  EXPECT_THROW(pad_slices(v, 1), CapacityError);
}

TEST(Synth, DeterministicAndValid) {
  SynthConfig cfg;
  cfg.n_patients = 12;
  cfg.height = cfg.width = 16;
  cfg.slices = 6;
  cfg.seed = 4;
  const auto a = generate_synthetic(cfg);
  const auto b = generate_synthetic(cfg);
  ASSERT_EQ(a.size(), 12u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(encode_volume(a[i]), encode_volume(b[i]));
    EXPECT_NO_THROW(a[i].validate());
  }
  cfg.seed = 5;
  EXPECT_NE(encode_volume(generate_synthetic(cfg)[0]), encode_volume(a[0]));
}

TEST(Synth, ClassBalanceAndValidation) {
  SynthConfig cfg;
  cfg.height = cfg.width = 8;
  cfg.slices = 2;
  const auto v = generate_synthetic(cfg);
  std::size_t pos = 0;
  for (const auto& x : v) pos += x.label;
  EXPECT_EQ(pos, 147u);
  EXPECT_EQ(v.size(), 280u);

  SynthConfig bad = cfg;
  bad.n_patients = 3;
  EXPECT_THROW(generate_synthetic(bad), ParameterError);
  bad = cfg;
  bad.signal = -1;
  EXPECT_THROW(generate_synthetic(bad), ParameterError);
  bad = cfg;
  bad.class_balance = 1.0;
  EXPECT_THROW(generate_synthetic(bad), ParameterError);
}

TEST(Synth, SignalStretchesPositiveBlobs) {
  // Mean mask mass by class; with a strong signal positives are larger.
  SynthConfig cfg;
  cfg.n_patients = 60;
  cfg.height = cfg.width = 32;
  cfg.slices = 8;
  cfg.signal = 3.0;
  cfg.noise = 0.0;
  double mass[2] = {0, 0};
  std::size_t count[2] = {0, 0};
  for (const auto& v : generate_synthetic(cfg)) {
    double m = 0;
    for (float x : v.voxels) m += x;
    mass[v.label] += m;
    ++count[v.label];
  }
  EXPECT_GT(mass[1] / count[1], 1.5 * mass[0] / count[0]);
}

TEST(Split, SizesAndStratification) {
  const DatasetManifest m = split_dataset(labelled_manifest(147, 133), {}, 11);
  EXPECT_NO_THROW(m.validate());
  const auto train = m.indices(Split::Train), val = m.indices(Split::Val), test = m.indices(Split::Test);
  EXPECT_EQ(train.size(), 168u);
  EXPECT_EQ(val.size(), 56u);
  EXPECT_EQ(test.size(), 56u);
  EXPECT_TRUE(m.indices(Split::Unassigned).empty());
  for (const auto* idx : {&train, &val, &test}) {
    std::size_t pos = 0;
    for (std::size_t i : *idx) pos += m.patients[i].label;
    const double expected = 147.0 * static_cast<double>(idx->size()) / 280.0;
    EXPECT_LE(std::abs(static_cast<double>(pos) - expected), 1.0);
    EXPECT_LE(std::abs(static_cast<double>(pos) / idx->size() - 147.0 / 280.0), 1.0 / idx->size());
  }
  EXPECT_TRUE(m.warnings.empty());
  EXPECT_EQ(m.split_seed, 11u);
}

TEST(Split, DeterministicAndSeedDependent) {
  const auto a = split_dataset(labelled_manifest(20, 20), {}, 1);
  const auto b = split_dataset(labelled_manifest(20, 20), {}, 1);
  const auto c = split_dataset(labelled_manifest(20, 20), {}, 2);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.patients, c.patients);
}

TEST(Split, WarningsAndFractionErrors) {
  const auto m = split_dataset(labelled_manifest(1, 9), {}, 1);
  EXPECT_FALSE(m.warnings.empty());
  EXPECT_THROW(split_dataset(labelled_manifest(5, 5), {0.5, 0.5, 0.5}, 1), ParameterError);
  EXPECT_THROW(split_dataset(labelled_manifest(5, 5), {1.2, -0.1, -0.1}, 1), ParameterError);
}

TEST(Manifest, RoundTripAndErrors) {
  DatasetManifest m = split_dataset(labelled_manifest(6, 6), {}, 3);
  m.generator = SynthConfig{};
  const std::string text = manifest_to_json(m);
  const DatasetManifest back = manifest_from_json(text);
  EXPECT_EQ(back, m);
  EXPECT_EQ(manifest_to_json(back), text);
  EXPECT_THROW(manifest_from_json(R"({"format":"other"})"), HeaderError);
  EXPECT_THROW(manifest_from_json("[1,2"), HeaderError);
  EXPECT_THROW(split_from_string("holdout"), ParameterError);
  DatasetManifest dup = m;
  dup.patients[1].id = dup.patients[0].id;
  EXPECT_THROW(dup.validate(), ContractError);
}

TEST(Manifest, WriteVolumesAndLoadSplit) {
  SynthConfig cfg;
  cfg.n_patients = 10;
  cfg.height = cfg.width = 8;
  cfg.slices = 3;
  auto vols = generate_synthetic(cfg);
  vols[2].voxels.resize(8 * 8 * 2);
  vols[2].slices = 2;
  const fs::path dir = scratch_dir("slicevol_manifest_test");
  DatasetManifest m = split_dataset(write_volumes(vols, dir, cfg), {}, 0);
  write_manifest(dir / "manifest.json", m);
  const DatasetManifest back = read_manifest(dir / "manifest.json");
  EXPECT_EQ(back, m);
  EXPECT_EQ(back.patients[2].original_slices, 2u);
  std::size_t loaded = 0;
  for (Split s : {Split::Train, Split::Val, Split::Test}) {
    for (const MaskVolume& v : load_split(back, dir, s)) {
      EXPECT_EQ(v.slices, 3u);
      ++loaded;
    }
  }
  EXPECT_EQ(loaded, 10u);
  // file bytes are a pure function of the config
  const fs::path dir2 = scratch_dir("slicevol_manifest_test2");
  write_volumes(generate_synthetic(cfg), dir2, cfg);
  EXPECT_EQ(slurp(dir / "volumes" / "P0000.svol"), slurp(dir2 / "volumes" / "P0000.svol"));
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST(RunConfig, ParsesSectionsAndRejectsUnknownKeys) {
  const RunConfig c = parse_run_config(R"({
    "model": {"embed_dim": 16, "encoder": {"image_size": 32, "patch_size": 8, "n_heads": 2},
              "aggregator": {"n_heads": 2, "max_slices": 8}, "heads": {"proj_dim": 8}},
    "train": {"lr0": 0.001, "max_epochs": 3, "loss": {"margin": 0.5}},
    "synth": {"n_patients": 40, "signal": 3.0},
    "eval": {"bootstrap_resamples": 200}
  })");
  EXPECT_EQ(c.model.encoder.embed_dim, 16u);
  EXPECT_EQ(c.model.aggregator.embed_dim, 16u);
  EXPECT_EQ(c.model.heads.embed_dim, 16u);
  EXPECT_EQ(c.model.encoder.image_size, 32u);
  EXPECT_EQ(c.train.lr0, 0.001);
  EXPECT_EQ(c.train.loss.margin, 0.5);
  EXPECT_EQ(c.train.batch_size, 8u);
  EXPECT_EQ(c.synth.n_patients, 40u);
  EXPECT_EQ(c.eval.bootstrap_resamples, 200u);

  const RunConfig back = parse_run_config(run_config_to_json(c));
  EXPECT_EQ(run_config_to_json(back), run_config_to_json(c));
  EXPECT_TRUE(back.train == c.train);

  EXPECT_THROW(parse_run_config(R"({"train": {"learning_rate": 1}})"), ParameterError);
  EXPECT_THROW(parse_run_config(R"({"extra": {}})"), ParameterError);
  EXPECT_THROW(parse_run_config(R"({"train": {"lr0": -1}})"), ParameterError);
  EXPECT_THROW(parse_run_config(R"({"train": {"lr0": "fast"}})"), ParameterError);
  EXPECT_THROW(parse_run_config("{"), ParameterError);
  EXPECT_NO_THROW(parse_run_config("{}"));
}
