#include <gtest/gtest.h>

#include <cstring>
#include <set>

#include "fixtures.hpp"
#include "toothalign/arch.hpp"
#include "toothalign/errors.hpp"
#include "toothalign/swin.hpp"

using namespace toothalign;

namespace {

Grid random_grid(std::size_t r, std::size_t c, std::size_t ch, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Grid g(r, c, ch);
  for (double& v : g.data) v = uniform(rng, -1, 1);
  return g;
}

bool token_equal(const Grid& a, const Grid& b, std::size_t r, std::size_t c) {
  return std::memcmp(a.token(r, c), b.token(r, c), a.channels * sizeof(double)) == 0;
}

std::size_t pmod(long v, std::size_t n) { return static_cast<std::size_t>(((v % long(n)) + long(n)) % long(n)); }

// Tokens of the block input that can influence token (r, c) of the output:
// same (possibly shifted) window and same shift region.
bool may_interact(std::size_t r, std::size_t c, std::size_t r2, std::size_t c2, std::size_t rows, std::size_t cols,
                  const WindowSpec& spec, bool shifted) {
  const long sr = shifted ? long(spec.shift_rows) : 0, sc = shifted ? long(spec.shift_cols) : 0;
  const std::size_t a = pmod(long(r) - sr, rows), b = pmod(long(c) - sc, cols);
  const std::size_t a2 = pmod(long(r2) - sr, rows), b2 = pmod(long(c2) - sc, cols);
  if (a / spec.rows != a2 / spec.rows || b / spec.cols != b2 / spec.cols) return false;
  const auto labels = shift_region_labels(rows, cols, spec, shifted);
  return labels[a * cols + b] == labels[a2 * cols + b2];
}

}  // namespace

TEST(Windows, PartitionReverseBijection) {
  const Grid g = random_grid(32, 64, 5, 1);
  for (auto [wr, wc] : {std::pair<std::size_t, std::size_t>{8, 8}, {8, 1}, {4, 16}, {32, 64}}) {
    const auto w = window_partition(g, wr, wc);
    EXPECT_EQ(w.size(), (32 / wr) * (64 / wc));
    EXPECT_EQ(window_reverse(w, 32, 64, wr, wc), g);
  }
  EXPECT_EQ(window_partition(g, 8, 8)[1].at(0, 0, 0), g.at(0, 8, 0));
  try {
    window_partition(g, 5, 8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndivisibleGrid);
  }
}

TEST(Windows, CyclicShiftInverse) {
  const Grid g = random_grid(16, 24, 3, 2);
  const Grid s = cyclic_shift(g, 4, 5);
  EXPECT_EQ(s.at(0, 0, 1), g.at(4, 5, 1));
  EXPECT_EQ(s.at(15, 23, 2), g.at(3, 4, 2));
  EXPECT_EQ(cyclic_shift(s, -4, -5), g);
  EXPECT_EQ(cyclic_shift(g, 0, 0), g);
}

TEST(Windows, RegionLabels) {
  const WindowSpec spec{8, 8, 4, 4};
  const auto none = shift_region_labels(32, 32, spec, false);
  EXPECT_TRUE(std::all_of(none.begin(), none.end(), [](int l) { return l == 0; }));
  const auto lab = shift_region_labels(32, 32, spec, true);
  EXPECT_EQ(std::set<int>(lab.begin(), lab.end()).size(), 9u);
  EXPECT_EQ(lab[0], 0);
  EXPECT_NE(lab[31 * 32 + 31], lab[24 * 32 + 24]);
  // the column-window variant has no column shift
  const auto col = shift_region_labels(32, 512, WindowSpec{8, 1, 4, 0}, true);
  EXPECT_EQ(std::set<int>(col.begin(), col.end()).size(), 3u);
}

TEST(Attention, RowsSumToOne) {
  SwinConfig cfg;
  const BlockWeights b = make_block(5, "t", cfg, {8, 8, 4, 4}, false);
  const Grid win = random_grid(8, 8, cfg.channels, 3);
  std::vector<double> probs;
  window_attention(win, b.attn, cfg, nullptr, &probs);
  const std::size_t n = 64;
  ASSERT_EQ(probs.size(), cfg.heads * n * n);
  for (std::size_t row = 0; row < cfg.heads * n; ++row) {
    double s = 0;
    for (std::size_t j = 0; j < n; ++j) s += probs[row * n + j];
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(Attention, MaskedPairsGetZeroWeight) {
  SwinConfig cfg;
  const BlockWeights b = make_block(5, "t", cfg, {8, 1, 4, 0}, false);
  const Grid win = random_grid(8, 1, cfg.channels, 4);
  std::vector<std::uint8_t> allowed(64, 0);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) allowed[i * 8 + j] = (i < 4) == (j < 4);
  std::vector<double> probs;
  window_attention(win, b.attn, cfg, &allowed, &probs);
  for (std::size_t h = 0; h < cfg.heads; ++h)
    for (std::size_t i = 0; i < 8; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < 8; ++j) {
        if (!allowed[i * 8 + j]) {
          EXPECT_EQ(probs[(h * 8 + i) * 8 + j], 0.0);
        }
        s += probs[(h * 8 + i) * 8 + j];
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Attention, BadHeadCount) {
  SwinConfig cfg;
  cfg.heads = 5;
  try {
    make_block(1, "t", cfg, {8, 8, 4, 4}, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadHeadCount);
  }
}

TEST(Block, ZeroResidualBranchesGiveIdentity) {
  SwinConfig cfg;
  BlockWeights b = make_block(6, "t", cfg, {8, 8, 4, 4}, true);
  std::fill(b.attn.proj.w.begin(), b.attn.proj.w.end(), 0.0);
  std::fill(b.fc2.w.begin(), b.fc2.w.end(), 0.0);
  const Grid x = random_grid(16, 16, cfg.channels, 5);
  EXPECT_EQ(swin_block(x, {8, 8, 4, 4}, b, cfg, false), x);
  EXPECT_EQ(swin_block(x, {8, 8, 4, 4}, b, cfg, true), x);
}

TEST(Block, TokenInfluenceConfinedToWindowAndRegion) {
  SwinConfig cfg;
  for (WindowSpec spec : {WindowSpec{8, 8, 4, 4}, WindowSpec{8, 1, 4, 0}}) {
    const BlockWeights b = make_block(7, "t", cfg, spec, false);
    const Grid x = random_grid(32, 16, cfg.channels, 6);
    for (bool shifted : {false, true}) {
      const Grid y = swin_block(x, spec, b, cfg, shifted);
      for (auto [pr, pc] : {std::pair<std::size_t, std::size_t>{3, 2}, {29, 15}, {6, 9}}) {
        Grid xp = x;
        xp.at(pr, pc, 0) += 0.5;
        const Grid yp = swin_block(xp, spec, b, cfg, shifted);
        for (std::size_t r = 0; r < 32; ++r)
          for (std::size_t c = 0; c < 16; ++c) {
            const bool linked = (r == pr && c == pc) || may_interact(r, c, pr, pc, 32, 16, spec, shifted);
            ASSERT_EQ(token_equal(y, yp, r, c), !linked) << r << "," << c << " shifted=" << shifted;
          }
      }
    }
  }
}

TEST(Block, AbsentRowsDoNotLeak) {
  SwinConfig cfg;
  const WindowSpec spec{8, 1, 4, 0};
  const BlockWeights b = make_block(8, "t", cfg, spec, false);
  std::vector<bool> present(32, true);
  for (std::size_t r : {0u, 5u, 13u, 31u}) present[r] = false;
  const Grid x = random_grid(32, 4, cfg.channels, 7);
  Grid xp = x;
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t k = 0; k < cfg.channels; ++k) xp.at(5, c, k) = 100.0 + double(k);
  for (bool shifted : {false, true}) {
    const Grid y = swin_block(x, spec, b, cfg, shifted, &present);
    const Grid yp = swin_block(xp, spec, b, cfg, shifted, &present);
    for (std::size_t r = 0; r < 32; ++r) {
      if (r == 5) continue;
      for (std::size_t c = 0; c < 4; ++c) ASSERT_TRUE(token_equal(y, yp, r, c));
    }
  }
}

TEST(Swtbs, MatchesUnrolledSharedBlock) {
  SwinConfig cfg;
  const WeightSet w = WeightSet::generate(9, cfg);
  const Grid x0 = random_grid(32, 1, cfg.channels, 8);
  std::vector<bool> present(32, true);
  present[4] = false;
  std::vector<Grid> trace;
  const Grid got = swtbs_forward(x0, w.swtbs_center, cfg, &present, &trace);

  const WindowSpec spec{cfg.window, 1, cfg.shift, 0};
  Grid x = x0;
  Grid acc(x0.rows, x0.cols, x0.channels);
  ASSERT_EQ(trace.size(), 5u);
  EXPECT_EQ(trace[0], x0);
  for (int k = 0; k < 4; ++k) {
    Grid y = swin_block(x, spec, w.swtbs_center, cfg, k % 2 == 1, &present);
    for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += y.data[i] - x.data[i];
    x = y;
    EXPECT_EQ(trace[k + 1], x);
  }
  for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += acc.data[i];
  EXPECT_EQ(got, x);

  // a different parameter set in any application changes the result
  const BlockWeights other = make_block(10, "other", cfg, spec, false);
  EXPECT_NE(swtbs_forward(x0, other, cfg, &present), got);
}

TEST(Swtp, ColumnTrace) {
  SwinConfig cfg;
  const WeightSet w = WeightSet::generate(11, cfg);
  const Grid x = random_grid(32, 512, cfg.channels, 9);
  std::vector<std::size_t> trace;
  const Grid y = swtp_forward(x, w, nullptr, &trace);
  EXPECT_EQ(trace, (std::vector<std::size_t>{512, 256, 128, 64, 32}));
  EXPECT_EQ(y.rows, 32u);
  EXPECT_EQ(y.cols, 1u);
  EXPECT_EQ(y.channels, cfg.channels);
}

TEST(ColumnMerge, PairsAdjacentColumns) {
  Linear proj(4, 2);
  proj.w = {1, 0, 0, 0, 0, 1, 0, 0};  // out0 = in0, out1 = in2 (first channel of the right token)
  Grid g(1, 4, 2);
  for (std::size_t c = 0; c < 4; ++c) g.at(0, c, 0) = double(c);
  const Grid m = column_merge(g, proj);
  EXPECT_EQ(m.cols, 2u);
  EXPECT_EQ(m.at(0, 1, 0), 2.0);
  EXPECT_EQ(m.at(0, 1, 1), 3.0);
  try {
    column_merge(Grid(1, 3, 2), proj);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OddColumns);
  }
}

TEST(Weights, DeterministicPerTensor) {
  const WeightSet a = WeightSet::generate(3);
  const WeightSet b = WeightSet::generate(3);
  EXPECT_EQ(a.head_fc2.w, b.head_fc2.w);
  EXPECT_NE(a.swtp_blocks[0][0].fc1.w, a.swtp_blocks[1][0].fc1.w);
  const double bound = 1.0 / std::sqrt(32.0);
  for (double v : a.head_fc1.w) EXPECT_LE(std::abs(v), bound);
  const WeightSet z = WeightSet::generate(3, {}, true);
  for (double v : z.head_fc1.b) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(z.head_fc1.w, a.head_fc1.w);
}

TEST(Gelu, Values) {
  EXPECT_EQ(gelu(0.0), 0.0);
  EXPECT_NEAR(gelu(1.0), 0.8413447460685429, 1e-12);
  EXPECT_NEAR(gelu(-10.0), 0.0, 1e-12);
}

TEST(PositionalEncoding, RowsDistinct) {
  const Grid pe = positional_encoding(32, 32);
  EXPECT_EQ(pe.at(0, 0, 1), 1.0);
  for (std::size_t r = 1; r < 32; ++r) EXPECT_NE(std::vector<double>(pe.token(r, 0), pe.token(r, 0) + 32),
                                                 std::vector<double>(pe.token(0, 0), pe.token(0, 0) + 32));
}

TEST(Predict, PresentTeethOnlyAndDeterministic) {
  const Case c = fixture::synth(21, 12).c.pre_view();
  const WeightSet w = WeightSet::generate(1);
  const TransformMap a = predict_case(c, w);
  std::size_t present = c.upper.present().size() + c.lower.present().size();
  EXPECT_EQ(a.size(), present);
  for (const auto& [id, t] : a) {
    EXPECT_TRUE(c.find(id)->present);
    EXPECT_EQ(t.pivot, c.find(id)->center());
  }
  const TransformMap b = predict_case(c, w);
  for (const auto& [id, t] : a) {
    EXPECT_EQ(t.rotation, b.at(id).rotation);
    EXPECT_EQ(t.translation, b.at(id).translation);
  }
}

TEST(Predict, AbsentRowsAreZero) {
  const Case c = fixture::synth(22, 12).c.pre_view();
  const NetworkInput in = prepare_input(c, OrderingMode::local_z);
  for (std::size_t r = 0; r < kToothSlots; ++r) {
    if (in.image.presence_mask[r]) continue;
    EXPECT_EQ(in.centers[r], Vec3());
    for (std::size_t col = 0; col < ToothPointImage::cols; ++col) ASSERT_EQ(in.image.at(r, col, 0), 0.0);
  }
}
