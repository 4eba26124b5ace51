#include "slicevol/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "slicevol/errors.hpp"

namespace slicevol::ad {

namespace {

using detail::Node;

void require_matrix(const Tensor& t, const char* what) {
  if (t.dim() != 2) {
    throw DimensionError(std::string(what) + " expects a matrix, got " + to_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": shape " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

std::span<const double> value_of(const Node& self, std::size_t k) {
  return self.inputs[k]->value;
}

// y += a * x
inline void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

inline double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

std::vector<double> transposed(std::span<const double> a, std::size_t rows, std::size_t cols) {
  std::vector<double> t(a.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) t[c * rows + r] = a[r * cols + c];
  }
  return t;
}

Shape with_last(Shape shape, std::size_t last) {
  shape.back() = last;
  return shape;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.size(0), k = a.size(1), n = b.size(1);
  if (b.size(0) != k) {
    throw DimensionError("matmul inner dimensions differ: " + to_string(a.shape()) + " x " +
                         to_string(b.shape()));
  }
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) axpy(av[i * k + p], &bv[p * n], &out[i * n], n);
  }
  return make_op({m, n}, std::move(out), {a, b},
                 [m, k, n](const Node& self, std::span<const double> g,
                           std::span<const std::span<double>> gin) {
                   const auto A = value_of(self, 0);
                   const auto B = value_of(self, 1);
                   if (!gin[0].empty()) {
                     // dA = dC . B^T
                     for (std::size_t i = 0; i < m; ++i) {
                       for (std::size_t p = 0; p < k; ++p) {
                         gin[0][i * k + p] += dot(&g[i * n], &B[p * n], n);
                       }
                     }
                   }
                   if (!gin[1].empty()) {
                     // dB = A^T . dC
                     for (std::size_t i = 0; i < m; ++i) {
                       for (std::size_t p = 0; p < k; ++p) {
                         axpy(A[i * k + p], &g[i * n], &gin[1][p * n], n);
                       }
                     }
                   }
                 });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  const std::size_t k = a.size(1);
  if (b.size(1) != k) {
    throw DimensionError("matmul_nt inner dimensions differ: " + to_string(a.shape()) + " x " +
                         to_string(b.shape()) + "^T");
  }
  return linear(a, b, Tensor());
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  const std::size_t r = a.size(0), c = a.size(1);
  return make_op({c, r}, transposed(a.data(), r, c), {a},
                 [r, c](const Node&, std::span<const double> g,
                        std::span<const std::span<double>> gin) {
                   for (std::size_t i = 0; i < r; ++i) {
                     for (std::size_t j = 0; j < c; ++j) gin[0][i * c + j] += g[j * r + i];
                   }
                 });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_matrix(weight, "linear weight");
  const std::size_t out_dim = weight.size(0), in_dim = weight.size(1);
  if (x.cols() != in_dim) {
    throw DimensionError("linear expects rows of width " + std::to_string(in_dim) + ", got " +
                         to_string(x.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && (bias.dim() != 1 || bias.size(0) != out_dim)) {
    throw DimensionError("linear bias shape " + to_string(bias.shape()) + " vs out " +
                         std::to_string(out_dim));
  }
  const std::size_t rows = x.rows();
  const auto xv = x.data();
  const std::vector<double> wt = transposed(weight.data(), out_dim, in_dim);
  std::vector<double> out(rows * out_dim, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double* o = &out[r * out_dim];
    if (has_bias) std::copy(bias.data().begin(), bias.data().end(), o);
    for (std::size_t i = 0; i < in_dim; ++i) axpy(xv[r * in_dim + i], &wt[i * out_dim], o, out_dim);
  }
  std::vector<Tensor> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return make_op(with_last(x.shape(), out_dim), std::move(out), std::move(inputs),
                 [rows, in_dim, out_dim](const Node& self, std::span<const double> g,
                                         std::span<const std::span<double>> gin) {
                   const auto X = value_of(self, 0);
                   const auto W = value_of(self, 1);
                   for (std::size_t r = 0; r < rows; ++r) {
                     const double* gr = &g[r * out_dim];
                     for (std::size_t o = 0; o < out_dim; ++o) {
                       const double go = gr[o];
                       if (go == 0.0) continue;
                       if (!gin[0].empty()) axpy(go, &W[o * in_dim], &gin[0][r * in_dim], in_dim);
                       if (!gin[1].empty()) axpy(go, &X[r * in_dim], &gin[1][o * in_dim], in_dim);
                     }
                     if (gin.size() > 2 && !gin[2].empty()) axpy(1.0, gr, gin[2].data(), out_dim);
                   }
                 });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_op(a.shape(), std::move(out), {a, b},
                 [](const Node&, std::span<const double> g, std::span<const std::span<double>> gin) {
                   for (const auto& gi : gin) {
                     if (!gi.empty()) axpy(1.0, g.data(), gi.data(), g.size());
                   }
                 });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_op(a.shape(), std::move(out), {a, b},
                 [](const Node&, std::span<const double> g, std::span<const std::span<double>> gin) {
                   if (!gin[0].empty()) axpy(1.0, g.data(), gin[0].data(), g.size());
                   if (!gin[1].empty()) axpy(-1.0, g.data(), gin[1].data(), g.size());
                 });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_op(a.shape(), std::move(out), {a, b},
                 [](const Node& self, std::span<const double> g,
                    std::span<const std::span<double>> gin) {
                   const auto A = value_of(self, 0);
                   const auto B = value_of(self, 1);
                   for (std::size_t i = 0; i < g.size(); ++i) {
                     if (!gin[0].empty()) gin[0][i] += g[i] * B[i];
                     if (!gin[1].empty()) gin[1][i] += g[i] * A[i];
                   }
                 });
}

Tensor scale(const Tensor& a, double factor) {
  const auto av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
  return make_op(a.shape(), std::move(out), {a},
                 [factor](const Node&, std::span<const double> g,
                          std::span<const std::span<double>> gin) {
                   axpy(factor, g.data(), gin[0].data(), g.size());
                 });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  const std::size_t d = x.cols();
  if (bias.dim() != 1 || bias.size(0) != d) {
    throw DimensionError("add_bias: bias " + to_string(bias.shape()) + " vs rows of " +
                         to_string(x.shape()));
  }
  const std::size_t rows = x.rows();
  const auto xv = x.data();
  const auto bv = bias.data();
  std::vector<double> out(xv.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] = xv[r * d + c] + bv[c];
  }
  return make_op(x.shape(), std::move(out), {x, bias},
                 [rows, d](const Node&, std::span<const double> g,
                           std::span<const std::span<double>> gin) {
                   if (!gin[0].empty()) axpy(1.0, g.data(), gin[0].data(), g.size());
                   if (!gin[1].empty()) {
                     for (std::size_t r = 0; r < rows; ++r) axpy(1.0, &g[r * d], gin[1].data(), d);
                   }
                 });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_op({1}, {s}, {a},
                 [](const Node&, std::span<const double> g, std::span<const std::span<double>> gin) {
                   for (double& v : gin[0]) v += g[0];
                 });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor mean_rows(const Tensor& x) {
  require_matrix(x, "mean_rows");
  const std::size_t n = x.size(0), d = x.size(1);
  const auto xv = x.data();
  std::vector<double> out(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) axpy(1.0, &xv[r * d], out.data(), d);
  const double inv = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= inv;
  return make_op({d}, std::move(out), {x},
                 [n, d, inv](const Node&, std::span<const double> g,
                             std::span<const std::span<double>> gin) {
                   for (std::size_t r = 0; r < n; ++r) axpy(inv, g.data(), &gin[0][r * d], d);
                 });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (element_count(shape) != a.numel()) {
    throw DimensionError("cannot reshape " + to_string(a.shape()) + " to " + to_string(shape));
  }
  const auto av = a.data();
  return make_op(std::move(shape), std::vector<double>(av.begin(), av.end()), {a},
                 [](const Node&, std::span<const double> g, std::span<const std::span<double>> gin) {
                   axpy(1.0, g.data(), gin[0].data(), g.size());
                 });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  const std::size_t d = x.cols();
  const std::size_t n_rows = x.rows();
  if (rows.empty()) throw DimensionError("gather_rows with no rows");
  const auto xv = x.data();
  std::vector<double> out(rows.size() * d);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= n_rows) {
      throw DimensionError("gather_rows index " + std::to_string(rows[r]) + " out of " +
                           std::to_string(n_rows));
    }
    std::copy_n(&xv[rows[r] * d], d, &out[r * d]);
  }
  return make_op({rows.size(), d}, std::move(out), {x},
                 [index = std::vector<std::size_t>(rows.begin(), rows.end()), d](
                     const Node&, std::span<const double> g, std::span<const std::span<double>> gin) {
                   for (std::size_t r = 0; r < index.size(); ++r) {
                     axpy(1.0, &g[r * d], &gin[0][index[r] * d], d);
                   }
                 });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  if (begin + count > x.rows() || count == 0) {
    throw DimensionError("slice_rows [" + std::to_string(begin) + ", +" + std::to_string(count) +
                         ") outside " + to_string(x.shape()));
  }
  std::vector<std::size_t> rows(count);
  for (std::size_t i = 0; i < count; ++i) rows[i] = begin + i;
  return gather_rows(x, rows);
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows with no inputs");
  const std::size_t d = parts.front().cols();
  std::size_t total = 0;
  std::vector<std::size_t> counts;
  for (const Tensor& p : parts) {
    if (p.cols() != d) throw DimensionError("concat_rows: mismatched row widths");
    counts.push_back(p.rows());
    total += p.rows();
  }
  std::vector<double> out;
  out.reserve(total * d);
  for (const Tensor& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return make_op({total, d}, std::move(out), std::vector<Tensor>(parts.begin(), parts.end()),
                 [counts, d](const Node&, std::span<const double> g,
                             std::span<const std::span<double>> gin) {
                   std::size_t offset = 0;
                   for (std::size_t k = 0; k < counts.size(); ++k) {
                     const std::size_t n = counts[k] * d;
                     if (!gin[k].empty()) axpy(1.0, &g[offset], gin[k].data(), n);
                     offset += n;
                   }
                 });
}

constexpr double kInvSqrt2 = 0.5 * std::numbers::sqrt2;

Tensor gelu(const Tensor& x) {
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 0.5 * xv[i] * (1.0 + std::erf(xv[i] * kInvSqrt2));
  }
  return make_op(x.shape(), std::move(out), {x},
                 [](const Node& self, std::span<const double> g,
                    std::span<const std::span<double>> gin) {
                   const auto X = value_of(self, 0);
                   constexpr double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
                   for (std::size_t i = 0; i < g.size(); ++i) {
                     const double cdf = 0.5 * (1.0 + std::erf(X[i] * kInvSqrt2));
                     const double pdf = inv_sqrt_2pi * std::exp(-0.5 * X[i] * X[i]);
                     gin[0][i] += g[i] * (cdf + X[i] * pdf);
                   }
                 });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t d = x.cols();
  if (gamma.numel() != d || beta.numel() != d) {
    throw DimensionError("layer_norm affine parameters must have width " + std::to_string(d));
  }
  if (!(eps > 0.0)) throw ParameterError("layer_norm eps must be positive");
  const std::size_t rows = x.rows();
  const auto xv = x.data();
  const auto gv = gamma.data();
  const auto bv = beta.data();
  auto x_hat = std::make_shared<std::vector<double>>(xv.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  std::vector<double> out(xv.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = &xv[r * d];
    double mu = 0.0;
    for (std::size_t c = 0; c < d; ++c) mu += row[c];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t c = 0; c < d; ++c) {
      const double h = (row[c] - mu) * is;
      (*x_hat)[r * d + c] = h;
      out[r * d + c] = gv[c] * h + bv[c];
    }
  }
  return make_op(x.shape(), std::move(out), {x, gamma, beta},
                 [rows, d, x_hat, inv_std](const Node& self, std::span<const double> g,
                                           std::span<const std::span<double>> gin) {
                   const auto G = value_of(self, 1);
                   const auto& H = *x_hat;
                   std::vector<double> dh(d);
                   for (std::size_t r = 0; r < rows; ++r) {
                     const double* gr = &g[r * d];
                     const double* hr = &H[r * d];
                     if (!gin[1].empty()) {
                       for (std::size_t c = 0; c < d; ++c) gin[1][c] += gr[c] * hr[c];
                     }
                     if (!gin[2].empty()) axpy(1.0, gr, gin[2].data(), d);
                     if (gin[0].empty()) continue;
                     double mean_dh = 0.0, mean_dh_h = 0.0;
                     for (std::size_t c = 0; c < d; ++c) {
                       dh[c] = gr[c] * G[c];
                       mean_dh += dh[c];
                       mean_dh_h += dh[c] * hr[c];
                     }
                     mean_dh /= static_cast<double>(d);
                     mean_dh_h /= static_cast<double>(d);
                     const double is = (*inv_std)[r];
                     for (std::size_t c = 0; c < d; ++c) {
                       gin[0][r * d + c] += is * (dh[c] - mean_dh - hr[c] * mean_dh_h);
                     }
                   }
                 });
}

Tensor softmax(const Tensor& x, int axis) {
  const Shape& shape = x.shape();
  const int rank = static_cast<int>(shape.size());
  const int ax = axis < 0 ? axis + rank : axis;
  if (ax < 0 || ax >= rank) throw DimensionError("softmax axis out of range");
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < ax; ++i) outer *= shape[i];
  for (int i = ax + 1; i < rank; ++i) inner *= shape[i];
  const std::size_t n = shape[ax];
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      double mx = xv[base];
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, xv[base + j * inner]);
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double e = std::exp(xv[base + j * inner] - mx);
        out[base + j * inner] = e;
        z += e;
      }
      for (std::size_t j = 0; j < n; ++j) out[base + j * inner] /= z;
    }
  }
  return make_op(shape, std::move(out), {x},
                 [outer, inner, n](const Node& self, std::span<const double> g,
                                   std::span<const std::span<double>> gin) {
                   const auto& y = self.value;
                   for (std::size_t o = 0; o < outer; ++o) {
                     for (std::size_t in = 0; in < inner; ++in) {
                       const std::size_t base = o * n * inner + in;
                       double s = 0.0;
                       for (std::size_t j = 0; j < n; ++j) s += g[base + j * inner] * y[base + j * inner];
                       for (std::size_t j = 0; j < n; ++j) {
                         const std::size_t idx = base + j * inner;
                         gin[0][idx] += y[idx] * (g[idx] - s);
                       }
                     }
                   }
                 });
}

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ParameterError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  const auto xv = x.data();
  auto mask = std::make_shared<std::vector<double>>(xv.size());
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = uniform01(rng) < rate ? 0.0 : keep_scale;
    (*mask)[i] = m;
    out[i] = xv[i] * m;
  }
  return make_op(x.shape(), std::move(out), {x},
                 [mask](const Node&, std::span<const double> g,
                        std::span<const std::span<double>> gin) {
                   for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i] * (*mask)[i];
                 });
}

}  // namespace slicevol::ad
