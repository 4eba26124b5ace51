#include "slicevol/data/manifest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <json.hpp>
#include <set>

#include "io/blob_file.hpp"
#include "json_config.hpp"
#include "slicevol/errors.hpp"
#include "slicevol/random.hpp"

namespace slicevol::data {

using nlohmann::json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    case Split::Unassigned: break;
  }
  return "unassigned";
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  if (name == "unassigned") return Split::Unassigned;
  throw ParameterError("unknown split '" + std::string(name) + "'");
}

void DatasetManifest::validate() const {
  std::set<std::string> ids;
  for (const PatientEntry& p : patients) {
    if (!ids.insert(p.id).second) throw ContractError("duplicate patient id " + p.id);
    if (p.label != 0 && p.label != 1) throw ContractError("patient " + p.id + " has an invalid label");
    if (p.original_slices > slices) {
      throw ContractError("patient " + p.id + " has more slices than the dataset");
    }
  }
}

std::vector<std::size_t> DatasetManifest::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < patients.size(); ++i) {
    if (patients[i].split == split) out.push_back(i);
  }
  return out;
}

std::string manifest_to_json(const DatasetManifest& m) {
  json patients = json::array();
  for (const PatientEntry& p : m.patients) {
    patients.push_back({{"id", p.id},
                        {"path", p.path},
                        {"label", p.label},
                        {"split", to_string(p.split)},
                        {"original_slices", p.original_slices}});
  }
  json j = {{"format", "slicevol-dataset"},
            {"version", 1},
            {"height", m.height},
            {"width", m.width},
            {"slices", m.slices},
            {"generator", m.generator ? config::to_json(*m.generator) : json(nullptr)},
            {"split_seed", m.split_seed ? json(*m.split_seed) : json(nullptr)},
            {"patients", std::move(patients)},
            {"warnings", m.warnings}};
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(std::string_view text) {
  DatasetManifest m;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "slicevol-dataset") throw HeaderError("not a slicevol dataset manifest");
    m.height = j.at("height").get<std::size_t>();
    m.width = j.at("width").get<std::size_t>();
    m.slices = j.at("slices").get<std::size_t>();
    if (!j.at("generator").is_null()) m.generator = config::synth_from_json(j.at("generator"));
    if (!j.at("split_seed").is_null()) m.split_seed = j.at("split_seed").get<std::uint64_t>();
    for (const json& p : j.at("patients")) {
      m.patients.push_back({p.at("id").get<std::string>(), p.at("path").get<std::string>(),
                            p.at("label").get<int>(),
                            split_from_string(p.at("split").get<std::string>()),
                            p.at("original_slices").get<std::size_t>()});
    }
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw HeaderError(std::string("dataset manifest: ") + e.what());
  }
  m.validate();
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  io::write_file(path, manifest_to_json(manifest));
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  return manifest_from_json(io::read_file(path));
}

DatasetManifest split_dataset(DatasetManifest manifest, const SplitFractions& fractions,
                              std::uint64_t seed) {
  const std::array<double, 3> f{fractions.train, fractions.val, fractions.test};
  for (double x : f) {
    if (!(x >= 0.0)) throw ParameterError("split fractions must be non-negative");
  }
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) throw ParameterError("split fractions must sum to 1");
  constexpr std::array<Split, 3> kSplits{Split::Train, Split::Val, Split::Test};

  const std::size_t n = manifest.patients.size();
  // Split sizes by largest remainder over the whole cohort.
  auto largest_remainder = [](std::size_t total, const std::array<double, 3>& weights) {
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> rem{};
    std::size_t used = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      const double ideal = weights[s] * static_cast<double>(total);
      counts[s] = static_cast<std::size_t>(std::floor(ideal));
      rem[s] = ideal - std::floor(ideal);
      used += counts[s];
    }
    while (used < total) {
      const std::size_t s = static_cast<std::size_t>(std::max_element(rem.begin(), rem.end()) - rem.begin());
      ++counts[s];
      rem[s] = -1.0;
      ++used;
    }
    return counts;
  };
  const std::array<std::size_t, 3> target = largest_remainder(n, f);

  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[manifest.patients[i].label].push_back(i);

  // Per-class counts: floor of the ideal share, then hand out leftovers to the
  // split with the largest unmet share that still has room.
  std::array<std::array<std::size_t, 3>, 2> cell{};
  std::array<std::size_t, 3> filled{};
  std::array<std::array<double, 3>, 2> ideal{};
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t s = 0; s < 3; ++s) {
      ideal[c][s] = f[s] * static_cast<double>(by_class[c].size());
      cell[c][s] = std::min(static_cast<std::size_t>(std::floor(ideal[c][s])), target[s] - filled[s]);
      filled[s] += cell[c][s];
    }
  }
  for (std::size_t c = 0; c < 2; ++c) {
    std::size_t assigned = cell[c][0] + cell[c][1] + cell[c][2];
    while (assigned < by_class[c].size()) {
      std::size_t best = 3;
      double best_gap = -1e300;
      for (std::size_t s = 0; s < 3; ++s) {
        if (filled[s] >= target[s]) continue;
        const double gap = ideal[c][s] - static_cast<double>(cell[c][s]);
        if (gap > best_gap) {
          best_gap = gap;
          best = s;
        }
      }
      ++cell[c][best];
      ++filled[best];
      ++assigned;
    }
  }

  Rng rng(substream_seed(seed, 0x5e11));
  for (std::size_t c = 0; c < 2; ++c) {
    std::vector<std::size_t>& members = by_class[c];
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[uniform_index(rng, i)]);
    std::size_t k = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      for (std::size_t j = 0; j < cell[c][s]; ++j) manifest.patients[members[k++]].split = kSplits[s];
    }
  }

  manifest.split_seed = seed;
  manifest.warnings.clear();
  for (std::size_t s = 0; s < 3; ++s) {
    if (target[s] > 0 && (cell[0][s] == 0 || cell[1][s] == 0)) {
      manifest.warnings.push_back(std::string("split '") + std::string(to_string(kSplits[s])) +
                                  "' does not contain both classes");
    }
  }
  return manifest;
}

DatasetManifest write_volumes(const std::vector<MaskVolume>& volumes,
                              const std::filesystem::path& dir,
                              const std::optional<SynthConfig>& generator) {
  if (volumes.empty()) throw ContractError("no volumes to write");
  DatasetManifest m;
  m.height = volumes.front().height;
  m.width = volumes.front().width;
  m.generator = generator;
  for (const MaskVolume& v : volumes) {
    if (v.height != m.height || v.width != m.width) {
      throw ContractError("volumes in one dataset must share H and W");
    }
    m.slices = std::max(m.slices, v.slices);
  }
  for (const MaskVolume& v : volumes) {
    const std::string rel = "volumes/" + v.patient_id + ".svol";
    write_volume(dir / rel, v.slices == m.slices ? v : pad_slices(v, m.slices));
    m.patients.push_back({v.patient_id, rel, v.label, Split::Unassigned, v.slices});
  }
  m.validate();
  return m;
}

std::vector<MaskVolume> load_split(const DatasetManifest& manifest,
                                   const std::filesystem::path& manifest_dir, Split split) {
  std::vector<MaskVolume> out;
  for (std::size_t i : manifest.indices(split)) {
    const PatientEntry& p = manifest.patients[i];
    MaskVolume v = read_volume(manifest_dir / p.path);
    if (v.height != manifest.height || v.width != manifest.width || v.slices != manifest.slices) {
      throw ShapeError("volume " + p.id + " does not match the dataset geometry");
    }
    if (v.patient_id != p.id || v.label != p.label) {
      throw ContractError("volume file for " + p.id + " disagrees with the manifest");
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace slicevol::data
