#include "toothalign/swin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "toothalign/errors.hpp"
#include "toothalign/kernels.hpp"
#include "toothalign/rng.hpp"

namespace toothalign {

namespace {

void fill_uniform(std::vector<double>& v, std::uint64_t seed, const std::string& name, double bound) {
  Rng rng = make_rng(derive_seed(seed, name));
  for (double& x : v) x = uniform(rng, -bound, bound);
}

Linear make_linear(std::uint64_t seed, const std::string& name, std::size_t in, std::size_t out, bool zero_bias) {
  Linear l(in, out);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  fill_uniform(l.w, seed, name + ".w", bound);
  if (!zero_bias) fill_uniform(l.b, seed, name + ".b", bound);
  return l;
}

std::size_t pos_mod(long v, std::size_t m) {
  const long r = v % static_cast<long>(m);
  return static_cast<std::size_t>(r < 0 ? r + static_cast<long>(m) : r);
}

// label along one axis of the shifted layout
int axis_region(std::size_t i, std::size_t n, std::size_t w, std::size_t s) {
  if (s == 0) return 0;
  if (i < n - w) return 0;
  if (i < n - s) return 1;
  return 2;
}

void check_heads(const SwinConfig& cfg, std::size_t channels) {
  if (cfg.heads == 0 || channels % cfg.heads != 0) {
    throw Error(ErrorCode::BadHeadCount, std::to_string(channels) + " channels cannot split into " +
                                             std::to_string(cfg.heads) + " heads");
  }
}

}  // namespace

void Linear::apply(const double* x, double* y) const {
  const auto axpy = kernels::active().axpy;
  std::copy(b.begin(), b.end(), y);
  for (std::size_t k = 0; k < in; ++k) axpy(x[k], w.data() + k * out, y, out);
}

void LayerNorm::apply(const double* x, double* y) const {
  const std::size_t n = gamma.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += x[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += (x[i] - mean) * (x[i] - mean);
  var /= static_cast<double>(n);
  const double inv = 1.0 / std::sqrt(var + eps);
  for (std::size_t i = 0; i < n; ++i) y[i] = (x[i] - mean) * inv * gamma[i] + beta[i];
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

BlockWeights make_block(std::uint64_t seed, const std::string& name, const SwinConfig& cfg, const WindowSpec& spec,
                        bool zero_bias) {
  const std::size_t c = cfg.channels;
  check_heads(cfg, c);
  BlockWeights b;
  b.norm1 = LayerNorm(c);
  b.norm2 = LayerNorm(c);
  b.attn.qkv = make_linear(seed, name + ".attn.qkv", c, 3 * c, zero_bias);
  b.attn.proj = make_linear(seed, name + ".attn.proj", c, c, zero_bias);
  b.attn.win_rows = spec.rows;
  b.attn.win_cols = spec.cols;
  b.attn.rel_bias.assign(cfg.heads * (2 * spec.rows - 1) * (2 * spec.cols - 1), 0.0);
  if (!zero_bias) fill_uniform(b.attn.rel_bias, seed, name + ".attn.rel_bias", 0.02);
  b.fc1 = make_linear(seed, name + ".mlp.fc1", c, cfg.mlp_ratio * c, zero_bias);
  b.fc2 = make_linear(seed, name + ".mlp.fc2", cfg.mlp_ratio * c, c, zero_bias);
  return b;
}

WeightSet WeightSet::generate(std::uint64_t seed, const SwinConfig& cfg, bool zero_bias) {
  const std::size_t c = cfg.channels;
  WeightSet w;
  w.cfg = cfg;
  const WindowSpec column{cfg.window, 1, cfg.shift, 0};
  const WindowSpec square{cfg.window, cfg.window, cfg.shift, cfg.shift};
  w.patch_embed = make_linear(seed, "patch_embed", 3, c, zero_bias);
  w.center_fc1 = make_linear(seed, "center.fc1", 3, c, zero_bias);
  w.center_fc2 = make_linear(seed, "center.fc2", c, c, zero_bias);
  w.swtbs_center = make_block(seed, "swtbs_center", cfg, column, zero_bias);
  for (std::size_t s = 0; s < 4; ++s) {
    const std::string stage = "swtp.stage" + std::to_string(s);
    w.swtp_blocks[s][0] = make_block(seed, stage + ".block0", cfg, square, zero_bias);
    w.swtp_blocks[s][1] = make_block(seed, stage + ".block1", cfg, square, zero_bias);
    w.swtp_merges[s] = make_linear(seed, stage + ".merge", 2 * c, c, zero_bias);
  }
  w.fusion_proj = make_linear(seed, "fusion.proj", 2 * c, c, zero_bias);
  w.swtbs_fusion = make_block(seed, "swtbs_fusion", cfg, column, zero_bias);
  w.head_fc1 = make_linear(seed, "head.fc1", c, c, zero_bias);
  w.head_fc2 = make_linear(seed, "head.fc2", c, 7, zero_bias);
  return w;
}

// ---------------------------------------------------------------------------
// Window mechanics

std::vector<Grid> window_partition(const Grid& g, std::size_t wr, std::size_t wc) {
  if (wr == 0 || wc == 0 || g.rows % wr != 0 || g.cols % wc != 0) {
    throw Error(ErrorCode::IndivisibleGrid, "window " + std::to_string(wr) + "x" + std::to_string(wc) +
                                                " does not tile a " + std::to_string(g.rows) + "x" +
                                                std::to_string(g.cols) + " grid");
  }
  std::vector<Grid> out;
  out.reserve((g.rows / wr) * (g.cols / wc));
  for (std::size_t r0 = 0; r0 < g.rows; r0 += wr) {
    for (std::size_t c0 = 0; c0 < g.cols; c0 += wc) {
      Grid w(wr, wc, g.channels);
      for (std::size_t r = 0; r < wr; ++r)
        std::copy_n(g.token(r0 + r, c0), wc * g.channels, w.token(r, 0));
      out.push_back(std::move(w));
    }
  }
  return out;
}

Grid window_reverse(const std::vector<Grid>& windows, std::size_t rows, std::size_t cols, std::size_t wr,
                    std::size_t wc) {
  if (wr == 0 || wc == 0 || rows % wr != 0 || cols % wc != 0 || windows.size() != (rows / wr) * (cols / wc)) {
    throw Error(ErrorCode::IndivisibleGrid, "window set does not tile the requested grid");
  }
  const std::size_t ch = windows.empty() ? 0 : windows.front().channels;
  Grid g(rows, cols, ch);
  std::size_t i = 0;
  for (std::size_t r0 = 0; r0 < rows; r0 += wr) {
    for (std::size_t c0 = 0; c0 < cols; c0 += wc, ++i) {
      for (std::size_t r = 0; r < wr; ++r) std::copy_n(windows[i].token(r, 0), wc * ch, g.token(r0 + r, c0));
    }
  }
  return g;
}

Grid cyclic_shift(const Grid& g, long sr, long sc) {
  Grid out(g.rows, g.cols, g.channels);
  for (std::size_t r = 0; r < g.rows; ++r) {
    const std::size_t src_r = pos_mod(static_cast<long>(r) + sr, g.rows);
    for (std::size_t c = 0; c < g.cols; ++c) {
      const std::size_t src_c = pos_mod(static_cast<long>(c) + sc, g.cols);
      std::copy_n(g.token(src_r, src_c), g.channels, out.token(r, c));
    }
  }
  return out;
}

std::vector<int> shift_region_labels(std::size_t rows, std::size_t cols, const WindowSpec& spec, bool shifted) {
  std::vector<int> labels(rows * cols, 0);
  if (!shifted) return labels;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      labels[r * cols + c] = axis_region(r, rows, spec.rows, spec.shift_rows) * 3 +
                             axis_region(c, cols, spec.cols, spec.shift_cols);
  return labels;
}

Grid window_attention(const Grid& window, const AttentionWeights& w, const SwinConfig& cfg,
                      const std::vector<std::uint8_t>* allowed, std::vector<double>* probs) {
  const std::size_t n = window.rows * window.cols;
  const std::size_t c = window.channels;
  check_heads(cfg, c);
  const std::size_t heads = cfg.heads;
  const std::size_t d = c / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const bool use_bias = cfg.relative_position_bias && !w.rel_bias.empty();
  if (use_bias && (window.rows != w.win_rows || window.cols != w.win_cols)) {
    throw Error(ErrorCode::InvalidArgument, "window shape differs from the relative-position table");
  }
  const std::size_t bias_cols = 2 * window.cols - 1;
  const std::size_t bias_rows = 2 * window.rows - 1;
  const auto axpy = kernels::active().axpy;

  std::vector<double> qkv(n * 3 * c);
  for (std::size_t i = 0; i < n; ++i) w.qkv.apply(window.data.data() + i * c, qkv.data() + i * 3 * c);
  if (probs != nullptr) probs->assign(heads * n * n, 0.0);

  std::vector<double> heads_out(n * c, 0.0);
  std::vector<double> s(n);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      const double* q = qkv.data() + i * 3 * c + h * d;
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (allowed != nullptr && !(*allowed)[i * n + j]) {
          s[j] = -std::numeric_limits<double>::infinity();
          continue;
        }
        const double* k = qkv.data() + j * 3 * c + c + h * d;
        double dotp = 0.0;
        for (std::size_t e = 0; e < d; ++e) dotp += q[e] * k[e];
        double v = dotp * scale;
        if (use_bias) {
          const std::size_t dr = i / window.cols + window.rows - 1 - j / window.cols;
          const std::size_t dc = i % window.cols + window.cols - 1 - j % window.cols;
          v += w.rel_bias[(h * bias_rows + dr) * bias_cols + dc];
        }
        s[j] = v;
        m = std::max(m, v);
      }
      if (m == -std::numeric_limits<double>::infinity()) continue;  // nothing visible
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        s[j] = std::exp(s[j] - m);
        sum += s[j];
      }
      double* out = heads_out.data() + i * c + h * d;
      for (std::size_t j = 0; j < n; ++j) {
        const double p = s[j] / sum;
        if (probs != nullptr) (*probs)[(h * n + i) * n + j] = p;
        axpy(p, qkv.data() + j * 3 * c + 2 * c + h * d, out, d);
      }
    }
  }

  Grid result(window.rows, window.cols, c);
  for (std::size_t i = 0; i < n; ++i) w.proj.apply(heads_out.data() + i * c, result.data.data() + i * c);
  return result;
}

Grid swin_block(const Grid& g, const WindowSpec& spec, const BlockWeights& w, const SwinConfig& cfg, bool shifted,
                const std::vector<bool>* present) {
  const std::size_t c = g.channels;
  const std::size_t tokens = g.rows * g.cols;
  if (present != nullptr && present->size() != g.rows) {
    throw Error(ErrorCode::InvalidArgument, "presence mask does not match the grid rows");
  }

  Grid normed(g.rows, g.cols, c);
  for (std::size_t t = 0; t < tokens; ++t) w.norm1.apply(g.data.data() + t * c, normed.data.data() + t * c);

  const long sr = shifted ? static_cast<long>(spec.shift_rows) : 0;
  const long sc = shifted ? static_cast<long>(spec.shift_cols) : 0;
  const Grid rolled = (sr != 0 || sc != 0) ? cyclic_shift(normed, sr, sc) : normed;
  const std::vector<int> labels = shift_region_labels(g.rows, g.cols, spec, sr != 0 || sc != 0);
  auto row_present = [&](std::size_t rolled_row) {
    return present == nullptr || (*present)[pos_mod(static_cast<long>(rolled_row) + sr, g.rows)];
  };

  std::vector<Grid> windows = window_partition(rolled, spec.rows, spec.cols);
  const std::size_t per_row = g.cols / spec.cols;
  const std::size_t n = spec.rows * spec.cols;
  std::vector<std::uint8_t> allowed(n * n);
  for (std::size_t wi = 0; wi < windows.size(); ++wi) {
    const std::size_t r0 = (wi / per_row) * spec.rows;
    const std::size_t c0 = (wi % per_row) * spec.cols;
    bool any_block = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t ri = r0 + i / spec.cols;
      const int li = labels[ri * g.cols + c0 + i % spec.cols];
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t rj = r0 + j / spec.cols;
        const bool ok = labels[rj * g.cols + c0 + j % spec.cols] == li && row_present(rj);
        allowed[i * n + j] = ok ? 1 : 0;
        any_block |= !ok;
      }
    }
    Grid out = window_attention(windows[wi], w.attn, cfg, any_block ? &allowed : nullptr);
    for (std::size_t i = 0; i < n; ++i) {
      if (!row_present(r0 + i / spec.cols)) std::fill_n(out.data.data() + i * c, c, 0.0);
    }
    windows[wi] = std::move(out);
  }
  Grid attn = window_reverse(windows, g.rows, g.cols, spec.rows, spec.cols);
  if (sr != 0 || sc != 0) attn = cyclic_shift(attn, -sr, -sc);

  Grid x = g;
  for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += attn.data[i];

  std::vector<double> ln(c), hidden(w.fc1.out), mlp(c);
  for (std::size_t t = 0; t < tokens; ++t) {
    double* xt = x.data.data() + t * c;
    w.norm2.apply(xt, ln.data());
    w.fc1.apply(ln.data(), hidden.data());
    for (double& v : hidden) v = gelu(v);
    w.fc2.apply(hidden.data(), mlp.data());
    for (std::size_t k = 0; k < c; ++k) xt[k] += mlp[k];
  }
  return x;
}

Grid swtbs_forward(const Grid& x0, const BlockWeights& block, const SwinConfig& cfg, const std::vector<bool>* present,
                   std::vector<Grid>* trace) {
  const WindowSpec spec{cfg.window, 1, cfg.shift, 0};
  Grid x = x0;
  Grid acc(x0.rows, x0.cols, x0.channels);
  if (trace != nullptr) trace->assign(1, x0);
  for (int k = 0; k < 4; ++k) {
    Grid y = swin_block(x, spec, block, cfg, k % 2 == 1, present);
    for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += y.data[i] - x.data[i];
    x = std::move(y);
    if (trace != nullptr) trace->push_back(x);
  }
  for (std::size_t i = 0; i < acc.data.size(); ++i) x.data[i] += acc.data[i];
  return x;
}

Grid column_merge(const Grid& g, const Linear& proj) {
  if (g.cols % 2 != 0) throw Error(ErrorCode::OddColumns, std::to_string(g.cols) + " columns cannot be paired");
  if (proj.in != 2 * g.channels) throw Error(ErrorCode::InvalidArgument, "merge projection expects 2C inputs");
  Grid out(g.rows, g.cols / 2, proj.out);
  std::vector<double> cat(2 * g.channels);
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < out.cols; ++c) {
      std::copy_n(g.token(r, 2 * c), 2 * g.channels, cat.data());  // adjacent tokens are contiguous
      proj.apply(cat.data(), out.token(r, c));
    }
  }
  return out;
}

Grid swtp_forward(const Grid& embedded, const WeightSet& w, const std::vector<bool>* present,
                  std::vector<std::size_t>* col_trace) {
  const WindowSpec spec{w.cfg.window, w.cfg.window, w.cfg.shift, w.cfg.shift};
  Grid x = embedded;
  if (col_trace != nullptr) col_trace->assign(1, x.cols);
  for (std::size_t s = 0; s < 4; ++s) {
    x = swin_block(x, spec, w.swtp_blocks[s][0], w.cfg, false, present);
    x = swin_block(x, spec, w.swtp_blocks[s][1], w.cfg, true, present);
    x = column_merge(x, w.swtp_merges[s]);
    if (col_trace != nullptr) col_trace->push_back(x.cols);
  }
  Grid pooled(x.rows, 1, x.channels);
  for (std::size_t r = 0; r < x.rows; ++r) {
    double* out = pooled.token(r, 0);
    for (std::size_t c = 0; c < x.cols; ++c)
      for (std::size_t k = 0; k < x.channels; ++k) out[k] += x.at(r, c, k);
    for (std::size_t k = 0; k < x.channels; ++k) out[k] /= static_cast<double>(x.cols);
  }
  return pooled;
}

Grid embed_image(const ToothPointImage& img, const WeightSet& w) {
  Grid g(ToothPointImage::rows, ToothPointImage::cols, w.cfg.channels);
  for (std::size_t r = 0; r < g.rows; ++r)
    for (std::size_t c = 0; c < g.cols; ++c) w.patch_embed.apply(&img.data[(r * g.cols + c) * 3], g.token(r, c));
  return g;
}

Grid positional_encoding(std::size_t rows, std::size_t channels) {
  Grid pe(rows, 1, channels);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < channels; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(channels));
      pe.at(r, 0, i) = std::sin(static_cast<double>(r) * freq);
      if (i + 1 < channels) pe.at(r, 0, i + 1) = std::cos(static_cast<double>(r) * freq);
    }
  }
  return pe;
}

Grid center_encoder(const std::array<Vec3, kToothSlots>& centers, const WeightSet& w) {
  const std::size_t c = w.cfg.channels;
  Grid out = positional_encoding(kToothSlots, c);
  std::vector<double> hidden(c), emb(c);
  for (std::size_t r = 0; r < kToothSlots; ++r) {
    const double in[3] = {centers[r].x, centers[r].y, centers[r].z};
    w.center_fc1.apply(in, hidden.data());
    for (double& v : hidden) v = gelu(v);
    w.center_fc2.apply(hidden.data(), emb.data());
    for (std::size_t k = 0; k < c; ++k) out.at(r, 0, k) += emb[k];
  }
  return out;
}

}  // namespace toothalign
