#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "toothalign/case_model.hpp"

namespace toothalign {

/// rows x cols tokens of `channels` values, row-major.
struct Grid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t channels = 0;
  std::vector<double> data;

  Grid() = default;
  Grid(std::size_t r, std::size_t c, std::size_t ch) : rows(r), cols(c), channels(ch), data(r * c * ch, 0.0) {}

  double* token(std::size_t r, std::size_t c) { return data.data() + (r * cols + c) * channels; }
  const double* token(std::size_t r, std::size_t c) const { return data.data() + (r * cols + c) * channels; }
  double& at(std::size_t r, std::size_t c, std::size_t k) { return token(r, c)[k]; }
  double at(std::size_t r, std::size_t c, std::size_t k) const { return token(r, c)[k]; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

struct SwinConfig {
  std::size_t channels = 32;
  std::size_t heads = 4;
  std::size_t window = 8;
  std::size_t shift = 4;
  std::size_t mlp_ratio = 4;
  bool relative_position_bias = true;
};

/// Window of wr x wc tokens; the shifted variant rolls the grid by
/// (shift_rows, shift_cols) first.
struct WindowSpec {
  std::size_t rows = 8;
  std::size_t cols = 8;
  std::size_t shift_rows = 4;
  std::size_t shift_cols = 4;
};

/// y = x W + b with W stored input-major, accumulated one input at a time.
struct Linear {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;  // in x out
  std::vector<double> b;  // out

  Linear() = default;
  Linear(std::size_t i, std::size_t o) : in(i), out(o), w(i * o, 0.0), b(o, 0.0) {}
  void apply(const double* x, double* y) const;
};

struct LayerNorm {
  std::vector<double> gamma;
  std::vector<double> beta;
  static constexpr double eps = 1e-5;

  LayerNorm() = default;
  explicit LayerNorm(std::size_t n) : gamma(n, 1.0), beta(n, 0.0) {}
  void apply(const double* x, double* y) const;
};

struct AttentionWeights {
  Linear qkv;   // C -> 3C
  Linear proj;  // C -> C
  /// heads x (2 wr - 1) x (2 wc - 1)
  std::vector<double> rel_bias;
  std::size_t win_rows = 0;
  std::size_t win_cols = 0;
};

struct BlockWeights {
  LayerNorm norm1;
  AttentionWeights attn;
  LayerNorm norm2;
  Linear fc1;  // C -> mlp_ratio C
  Linear fc2;
};

struct WeightSet {
  SwinConfig cfg;
  Linear patch_embed;  // 3 -> C, per point
  Linear center_fc1;   // 3 -> C
  Linear center_fc2;   // C -> C
  BlockWeights swtbs_center;  // the single block shared by all four applications
  std::array<std::array<BlockWeights, 2>, 4> swtp_blocks;  // regular, shifted
  std::array<Linear, 4> swtp_merges;                       // 2C -> C
  Linear fusion_proj;  // 2C -> C
  BlockWeights swtbs_fusion;
  Linear head_fc1;  // C -> C
  Linear head_fc2;  // C -> 7

  /// Uniform in +-1/sqrt(fan_in), each tensor from its own derived stream.
  /// `zero_bias` zeroes every bias and layer-norm shift.
  static WeightSet generate(std::uint64_t seed, const SwinConfig& cfg = {}, bool zero_bias = false);
};

BlockWeights make_block(std::uint64_t seed, const std::string& name, const SwinConfig& cfg, const WindowSpec& spec,
                        bool zero_bias);

double gelu(double x);

// ---------------------------------------------------------------------------
// Window mechanics

/// Windows in row-major order, each a wr x wc grid. Throws IndivisibleGrid.
std::vector<Grid> window_partition(const Grid& g, std::size_t wr, std::size_t wc);
Grid window_reverse(const std::vector<Grid>& windows, std::size_t rows, std::size_t cols, std::size_t wr,
                    std::size_t wc);

/// out(r, c) = in((r + sr) mod rows, (c + sc) mod cols); negative shifts invert.
Grid cyclic_shift(const Grid& g, long sr, long sc);

/// Region label of every position of the shifted grid; tokens attend only
/// within their region. All zero when the shift is zero.
std::vector<int> shift_region_labels(std::size_t rows, std::size_t cols, const WindowSpec& spec, bool shifted);

/// Multi-head attention over one window. `allowed` (N x N, optional) blocks
/// pairs; `probs` (optional) receives heads x N x N softmax rows.
Grid window_attention(const Grid& window, const AttentionWeights& w, const SwinConfig& cfg,
                      const std::vector<std::uint8_t>* allowed = nullptr, std::vector<double>* probs = nullptr);

/// Pre-norm block. `present` (one flag per row, optional): absent rows are
/// masked as keys and their attention output is zero.
Grid swin_block(const Grid& g, const WindowSpec& spec, const BlockWeights& w, const SwinConfig& cfg, bool shifted,
                const std::vector<bool>* present = nullptr);

/// Four applications of one shared block with alternating shift; the
/// residual of every application is summed onto the last output.
/// `trace` (optional) receives the five intermediate states x0..x4.
Grid swtbs_forward(const Grid& x, const BlockWeights& block, const SwinConfig& cfg,
                   const std::vector<bool>* present = nullptr, std::vector<Grid>* trace = nullptr);

/// Concatenates adjacent column pairs and projects 2C -> C. Throws OddColumns.
Grid column_merge(const Grid& g, const Linear& proj);

/// Stage-by-stage column counts are appended to `col_trace` when given.
/// Returns rows x C (mean over the remaining columns).
Grid swtp_forward(const Grid& embedded, const WeightSet& w, const std::vector<bool>* present = nullptr,
                  std::vector<std::size_t>* col_trace = nullptr);

Grid embed_image(const ToothPointImage& img, const WeightSet& w);

/// Fixed sinusoidal encoding of tooth index 0..rows-1.
Grid positional_encoding(std::size_t rows, std::size_t channels);

Grid center_encoder(const std::array<Vec3, kToothSlots>& centers, const WeightSet& w);

// ---------------------------------------------------------------------------
// Prediction

/// Normalized image and centres for a case (arch_line ordering by default).
struct NetworkInput {
  ToothPointImage image;
  std::array<Vec3, kToothSlots> centers{};
};

/// Jaws with a single present tooth have no arch; arch_line ordering then
/// throws TooFewTeeth.
NetworkInput prepare_input(const Case& c, OrderingMode ordering = OrderingMode::arch_line,
                           const ImageOptions& opts = {});

/// One pose per present tooth (pivot = tooth centroid); absent rows ignored.
TransformMap predict_transforms(const ToothPointImage& image, const std::array<Vec3, kToothSlots>& centers,
                                const Case& c, const WeightSet& w);

TransformMap predict_case(const Case& c, const WeightSet& w, OrderingMode ordering = OrderingMode::arch_line,
                          const ImageOptions& opts = {});

}  // namespace toothalign
