#include "slicevol/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "slicevol/errors.hpp"
#include "slicevol/random.hpp"

namespace slicevol::data {

namespace {

struct Blob {
  double cy, cx, cz;
  double ry, rx, rz;
  double cos_t, sin_t;
};

constexpr double kEdgeSoftness = 0.08;

Blob draw_blob(const SynthConfig& cfg, int label, Rng& rng) {
  const double h = static_cast<double>(cfg.height);
  const double w = static_cast<double>(cfg.width);
  const double s = static_cast<double>(cfg.slices);
  const double stretch = 1.0 + cfg.signal * label;
  Blob b;
  b.cy = h * (0.3 + 0.4 * uniform01(rng));
  b.cx = w * (0.3 + 0.4 * uniform01(rng));
  b.cz = (s - 1.0) * (0.35 + 0.3 * uniform01(rng));
  const double radius = std::min(h, w) * (0.08 + 0.08 * uniform01(rng));
  const double aspect = std::exp(0.15 * standard_normal(rng)) * stretch;
  b.ry = radius * std::sqrt(aspect);
  b.rx = radius / std::sqrt(aspect);
  b.rz = s * (0.06 + 0.05 * uniform01(rng)) * stretch;
  const double theta = std::numbers::pi * uniform01(rng);
  b.cos_t = std::cos(theta);
  b.sin_t = std::sin(theta);
  return b;
}

double blob_value(const Blob& b, double y, double x, double z) {
  const double dy = y - b.cy, dx = x - b.cx;
  const double u = (b.cos_t * dy + b.sin_t * dx) / b.ry;
  const double v = (-b.sin_t * dy + b.cos_t * dx) / b.rx;
  const double t = (z - b.cz) / b.rz;
  const double rho = std::sqrt(u * u + v * v + t * t);
  return 1.0 / (1.0 + std::exp((rho - 1.0) / kEdgeSoftness));
}

}  // namespace

void SynthConfig::validate() const {
  if (n_patients < 4) throw ParameterError("synthetic cohort needs at least 4 patients");
  if (!(class_balance > 0.0 && class_balance < 1.0)) {
    throw ParameterError("class_balance must lie in (0, 1)");
  }
  if (!(signal >= 0.0)) throw ParameterError("signal must be non-negative");
  if (!(noise >= 0.0)) throw ParameterError("noise must be non-negative");
  if (height == 0 || width == 0 || slices == 0) throw ParameterError("volume axes must be positive");
}

std::vector<MaskVolume> generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_patients;
  const std::size_t n_pos = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg.class_balance * static_cast<double>(n))), 1, n - 1);

  std::vector<int> labels(n, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_pos), 1);
  Rng label_rng(substream_seed(cfg.seed, 0));
  for (std::size_t i = n; i > 1; --i) std::swap(labels[i - 1], labels[uniform_index(label_rng, i)]);

  std::vector<MaskVolume> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(substream_seed(cfg.seed, i + 1));
    MaskVolume& v = out[i];
    char id[32];
    std::snprintf(id, sizeof(id), "P%04zu", i);
    v.patient_id = id;
    v.label = labels[i];
    v.height = cfg.height;
    v.width = cfg.width;
    v.slices = cfg.slices;
    v.voxels.assign(cfg.height * cfg.width * cfg.slices, 0.0f);

    const std::size_t n_blobs = 1 + uniform_index(rng, 3);
    std::vector<Blob> blobs;
    for (std::size_t k = 0; k < n_blobs; ++k) blobs.push_back(draw_blob(cfg, v.label, rng));

    for (std::size_t y = 0; y < cfg.height; ++y) {
      for (std::size_t x = 0; x < cfg.width; ++x) {
        for (std::size_t z = 0; z < cfg.slices; ++z) {
          double value = 0.0;
          for (const Blob& b : blobs) {
            value = std::max(value, blob_value(b, static_cast<double>(y) + 0.5,
                                               static_cast<double>(x) + 0.5, static_cast<double>(z)));
          }
          if (cfg.noise > 0.0) value += cfg.noise * standard_normal(rng);
          v.at(y, x, z) = static_cast<float>(std::clamp(value, 0.0, 1.0));
        }
      }
    }
  }
  return out;
}

}  // namespace slicevol::data
