#include <algorithm>
#include <cmath>

#include "slicevol/autodiff/ops.hpp"
#include "slicevol/errors.hpp"

namespace slicevol::ad {

AttentionResult self_attention(const Tensor& qkv, std::size_t tokens, std::size_t heads) {
  if (qkv.dim() != 2 || qkv.size(1) % 3 != 0) {
    throw DimensionError("self_attention expects packed [n x 3d] input, got " +
                         to_string(qkv.shape()));
  }
  const std::size_t d = qkv.size(1) / 3;
  const std::size_t n = qkv.size(0);
  if (tokens == 0 || n % tokens != 0) {
    throw DimensionError("self_attention: " + std::to_string(n) + " rows are not a multiple of " +
                         std::to_string(tokens) + " tokens");
  }
  if (heads == 0 || d % heads != 0) {
    throw DimensionError("self_attention: " + std::to_string(heads) + " heads do not divide " +
                         std::to_string(d));
  }
  const std::size_t groups = n / tokens;
  const std::size_t dh = d / heads;
  const std::size_t width = 3 * d;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  const auto x = qkv.data();
  auto probs = std::make_shared<std::vector<double>>(groups * heads * tokens * tokens);
  std::vector<double> out(n * d, 0.0);

  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t row0 = g * tokens;
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t qc = h * dh, kc = d + h * dh, vc = 2 * d + h * dh;
      double* P = &(*probs)[(g * heads + h) * tokens * tokens];
      for (std::size_t i = 0; i < tokens; ++i) {
        const double* q = &x[(row0 + i) * width + qc];
        double* p = &P[i * tokens];
        double mx = -INFINITY;
        for (std::size_t j = 0; j < tokens; ++j) {
          const double* k = &x[(row0 + j) * width + kc];
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) s += q[c] * k[c];
          p[j] = s * inv_sqrt_dh;
          mx = std::max(mx, p[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < tokens; ++j) {
          p[j] = std::exp(p[j] - mx);
          z += p[j];
        }
        for (std::size_t j = 0; j < tokens; ++j) p[j] /= z;
        double* o = &out[(row0 + i) * d + h * dh];
        for (std::size_t j = 0; j < tokens; ++j) {
          const double* v = &x[(row0 + j) * width + vc];
          for (std::size_t c = 0; c < dh; ++c) o[c] += p[j] * v[c];
        }
      }
    }
  }

  AttentionResult result;
  result.groups = groups;
  result.heads = heads;
  result.tokens = tokens;
  result.probs = probs;
  result.output = make_op(
      {n, d}, std::move(out), {qkv},
      [probs, groups, heads, tokens, d, dh, width, inv_sqrt_dh](
          const detail::Node& self, std::span<const double> gout,
          std::span<const std::span<double>> gin) {
        const auto& X = self.inputs[0]->value;
        auto& G = gin[0];
        std::vector<double> dp(tokens);
        for (std::size_t g = 0; g < groups; ++g) {
          const std::size_t row0 = g * tokens;
          for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t qc = h * dh, kc = d + h * dh, vc = 2 * d + h * dh;
            const double* P = &(*probs)[(g * heads + h) * tokens * tokens];
            for (std::size_t i = 0; i < tokens; ++i) {
              const double* go = &gout[(row0 + i) * d + h * dh];
              const double* p = &P[i * tokens];
              // dP and dV
              double weighted = 0.0;
              for (std::size_t j = 0; j < tokens; ++j) {
                const double* v = &X[(row0 + j) * width + vc];
                double* gv = &G[(row0 + j) * width + vc];
                double s = 0.0;
                for (std::size_t c = 0; c < dh; ++c) {
                  s += go[c] * v[c];
                  gv[c] += p[j] * go[c];
                }
                dp[j] = s;
                weighted += s * p[j];
              }
              // Softmax Jacobian, then the scaled score gradient into q and k.
              const double* q = &X[(row0 + i) * width + qc];
              double* gq = &G[(row0 + i) * width + qc];
              for (std::size_t j = 0; j < tokens; ++j) {
                const double ds = p[j] * (dp[j] - weighted) * inv_sqrt_dh;
                if (ds == 0.0) continue;
                const double* k = &X[(row0 + j) * width + kc];
                double* gk = &G[(row0 + j) * width + kc];
                for (std::size_t c = 0; c < dh; ++c) {
                  gq[c] += ds * k[c];
                  gk[c] += ds * q[c];
                }
              }
            }
          }
        }
      });
  return result;
}

}  // namespace slicevol::ad
