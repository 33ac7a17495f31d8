#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "specgrasp/analysis.hpp"
#include "specgrasp/errors.hpp"
#include "support.hpp"

using namespace specgrasp;
using namespace sgtest;

namespace {

constexpr double kDeg = 180.0 / 3.14159265358979323846;

double arccos_sam(std::span<const double> r, std::span<const double> c) {
  double rc = 0, rr = 0, cc = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    rc += r[i] * c[i];
    rr += r[i] * r[i];
    cc += c[i] * c[i];
  }
  return std::acos(std::clamp(rc / std::sqrt(rr * cc), -1.0, 1.0)) * kDeg;
}

Spectrum cal(const WavelengthGrid& g, std::vector<double> v) { return from_values(g, std::move(v), SpectrumKind::Calibrated); }

LabeledSpectrum item(std::string id, std::string label, Spectrum s, std::string group = {}) {
  return {std::move(id), std::move(label), std::move(s), std::move(group)};
}

// Two classes on a small grid; class a is shifted by `shift` at `channel` only.
std::vector<LabeledSpectrum> two_class_set(std::mt19937_64& rng, std::size_t n, std::size_t channel, double shift,
                                           int per_class = 30, double scale = 1.0) {
  const auto g = grid(400, 400 + 10.0 * (n - 1), 10);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<LabeledSpectrum> out;
  for (int c = 0; c < 2; ++c)
    for (int s = 0; s < per_class; ++s) {
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = scale * (0.5 + noise(rng) + (c == 0 && i == channel ? shift : 0.0));
      out.push_back(item(std::to_string(c) + "_" + std::to_string(s), c == 0 ? "A" : "B", cal(g, v)));
    }
  return out;
}

// Independent Fisher direction: Gaussian elimination on the ridge-regularized pooled scatter.
std::vector<double> fisher_oracle(const std::vector<LabeledSpectrum>& set, double scale) {
  const std::size_t d = set.front().spectrum.size();
  std::vector<double> ma(d, 0), mb(d, 0);
  double na = 0, nb = 0;
  for (const auto& it : set) {
    auto& m = it.label == "A" ? ma : mb;
    (it.label == "A" ? na : nb) += 1;
    for (std::size_t i = 0; i < d; ++i) m[i] += it.spectrum[i];
  }
  for (std::size_t i = 0; i < d; ++i) ma[i] /= na, mb[i] /= nb;
  std::vector<std::vector<double>> s(d, std::vector<double>(d + 1, 0.0));
  for (const auto& it : set) {
    const auto& m = it.label == "A" ? ma : mb;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) s[i][j] += (it.spectrum[i] - m[i]) * (it.spectrum[j] - m[j]) / (na + nb - 2);
  }
  double tr = 0;
  for (std::size_t i = 0; i < d; ++i) tr += s[i][i];
  for (std::size_t i = 0; i < d; ++i) s[i][i] += scale * tr / d, s[i][d] = ma[i] - mb[i];
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < d; ++r)
      if (std::abs(s[r][c]) > std::abs(s[p][c])) p = r;
    std::swap(s[c], s[p]);
    for (std::size_t r = 0; r < d; ++r) {
      if (r == c) continue;
      const double f = s[r][c] / s[c][c];
      for (std::size_t k = c; k <= d; ++k) s[r][k] -= f * s[c][k];
    }
  }
  std::vector<double> w(d);
  for (std::size_t i = 0; i < d; ++i) w[i] = s[i][d] / s[i][i];
  return w;
}

}  // namespace

TEST(Sam, Examples) {
  const auto g2 = grid(400, 410, 10);
  const auto g3 = grid(400, 420, 10);
  EXPECT_EQ(sam(cal(g2, {1, 0}), cal(g2, {0, 1})), 90.0);
  EXPECT_NEAR(sam(cal(g3, {1, 0, 1}), cal(g3, {1, 1, 1})), 35.264389682754654, 1e-6);
  EXPECT_NEAR(sam(cal(g3, {1, 0, 1}), cal(g3, {1, 1, 1})), std::acos(2 / std::sqrt(6.0)) * kDeg, 1e-12);
  EXPECT_EQ(sam(cal(g3, {0.3, 0.2, 0.9}), cal(g3, {0.3, 0.2, 0.9})), 0.0);
}

TEST(Sam, Properties) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> k(1e-3, 1e3);
  const auto g = grid(400, 1700, 5);
  for (int t = 0; t < 300; ++t) {
    const auto r = cal(g, random_positive(rng, g.size()));
    const auto c = cal(g, random_positive(rng, g.size()));
    const double s = sam(r, c);
    EXPECT_EQ(sam(r, r), 0.0);
    EXPECT_NEAR(sam(c, r), s, 1e-12);
    EXPECT_NEAR(sam(scaled(r, k(rng), SpectrumKind::Calibrated), scaled(c, k(rng), SpectrumKind::Calibrated)), s, 1e-9);
    EXPECT_NEAR(s, arccos_sam(r.values(), c.values()), 1e-6);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 180.0);
  }
}

TEST(Sam, SkipsExcludedChannels) {
  const auto g = grid(400, 420, 10);
  const Spectrum r(g, {1, 50, 1}, SpectrumKind::Calibrated, {}, {0, kFlagSaturated, 0});
  EXPECT_EQ(sam(r, cal(g, {2, 0, 2})), 0.0);
  const Spectrum above(g, {1, 1.2, 1}, SpectrumKind::Calibrated, {}, {0, kFlagAboveUnity, 0});
  EXPECT_GT(sam(above, cal(g, {1, 1, 1})), 0.0);
}

TEST(Sam, Errors) {
  const auto g = grid(400, 420, 10);
  EXPECT_THROW(sam(cal(g, {0, 0, 0}), cal(g, {1, 1, 1})), NumericError);
  EXPECT_THROW(sam(cal(g, {1, 1, 1}), cal(grid(400, 440, 20), {1, 1, 1})), ValidationError);
}

TEST(PairwiseSam, Examples) {
  const auto g = grid(400, 420, 10);
  std::vector<LabeledSpectrum> same = {item("a", "X", cal(g, {1, 2, 3})), item("b", "X", cal(g, {1, 2, 3}))};
  const auto m = pairwise_sam(same);
  ASSERT_EQ(m.size(), 2u);
  for (double v : m.cells) EXPECT_EQ(v, 0.0);
  std::vector<LabeledSpectrum> ortho = {item("a", "X", cal(g, {1, 0, 0})), item("b", "Y", cal(g, {0, 1, 0})),
                                        item("c", "Z", cal(g, {0, 0, 1}))};
  const auto o = pairwise_sam(ortho);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(o.at(i, j), i == j ? 0.0 : 90.0);
}

TEST(PairwiseSam, MatchesOracleForAnyWorkerCount) {
  std::mt19937_64 rng(5);
  const auto g = grid(400, 1700, 10);
  std::vector<LabeledSpectrum> set;
  for (int i = 0; i < 50; ++i) set.push_back(item("s" + std::to_string(i), i % 2 ? "X" : "Y", cal(g, random_positive(rng, g.size()))));
  const auto m1 = pairwise_sam(set, 1);
  for (std::size_t i = 0; i < set.size(); ++i)
    for (std::size_t j = 0; j < set.size(); ++j) {
      EXPECT_NEAR(m1.at(i, j), i == j ? 0.0 : arccos_sam(set[i].spectrum.values(), set[j].spectrum.values()), 1e-6);
      EXPECT_EQ(m1.at(i, j), m1.at(j, i));
    }
  for (unsigned w : {2u, 3u, 8u, 64u}) EXPECT_EQ(pairwise_sam(set, w).cells, m1.cells);
}

TEST(ClassMean, Examples) {
  SamMatrix m;
  m.ids = {"a1", "a2", "b1", "b2"};
  m.labels = {"A", "A", "B", "B"};
  // symmetric pair values
  const double ab[4][4] = {{0, 2, 10, 12}, {2, 0, 14, 16}, {10, 14, 0, 4}, {12, 16, 4, 0}};
  for (auto& row : ab) m.cells.insert(m.cells.end(), row, row + 4);
  const auto t = class_mean_sam(m);
  ASSERT_EQ(t.classes, (std::vector<std::string>{"A", "B"}));
  EXPECT_DOUBLE_EQ(t.at(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(t.at(1, 1), 4.0);
  EXPECT_DOUBLE_EQ(t.at(0, 1), (10 + 12 + 14 + 16) / 4.0);
  EXPECT_DOUBLE_EQ(t.at(1, 0), t.at(0, 1));

  SamMatrix two;
  two.ids = {"x", "y"};
  two.labels = {"X", "Y"};
  two.cells = {0, 33, 33, 0};
  const auto s = class_mean_sam(two);
  EXPECT_DOUBLE_EQ(s.at(0, 1), 33.0);
  EXPECT_TRUE(std::isnan(s.at(0, 0)));
}

TEST(ClassMean, IdenticalItems) {
  const auto g = grid(400, 420, 10);
  std::vector<LabeledSpectrum> set;
  for (const char* l : {"A", "A", "B", "B", "C"}) set.push_back(item(std::string(l) + std::to_string(set.size()), l, cal(g, {1, 2, 3})));
  const auto t = class_mean_sam(pairwise_sam(set));
  for (double v : t.cells) EXPECT_TRUE(std::isnan(v) || v == 0.0) << v;
}

TEST(Pregrasp, StagesEqualToFinalGiveZeros) {
  std::mt19937_64 rng(2);
  const auto g = grid(400, 1700, 10);
  std::vector<GraspTrial> trials;
  for (int t = 0; t < 4; ++t) {
    GraspTrial trial;
    trial.object_id = "obj" + std::to_string(t);
    trial.label = "Plastic";
    const auto s = cal(g, random_positive(rng, g.size()));
    for (double st : kPregraspStages) trial.stages.emplace(st, s);
    trial.final_spectrum = s;
    trials.push_back(std::move(trial));
  }
  const auto rows = pregrasp_consistency(trials);
  ASSERT_EQ(rows.size(), kPregraspStages.size());
  for (const auto& r : rows) {
    EXPECT_EQ(r.mean_sam_deg, 0.0);
    EXPECT_EQ(r.std_sam_deg, 0.0);
    EXPECT_EQ(r.trials, 4u);
  }
}

TEST(Pregrasp, MixturesGiveNonIncreasingSam) {
  std::mt19937_64 rng(9);
  const auto g = grid(400, 1700, 10);
  std::vector<GraspTrial> trials;
  for (int t = 0; t < 6; ++t) {
    const auto fin = random_positive(rng, g.size(), 0.2, 0.9);
    const auto amb = random_positive(rng, g.size(), 0.0, 2.0);
    GraspTrial trial;
    trial.object_id = "o" + std::to_string(t);
    trial.label = "Wood";
    for (double st : kPregraspStages) {
      std::vector<double> v(g.size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = st * fin[i] + (1 - st) * amb[i];
      trial.stages.emplace(st, cal(g, v));
    }
    trial.final_spectrum = cal(g, fin);
    trials.push_back(std::move(trial));
  }
  const auto rows = pregrasp_consistency(trials);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(rows[i].mean_sam_deg, rows[i - 1].mean_sam_deg);
}

TEST(Pregrasp, SampleStandardDeviation) {
  const auto g = grid(400, 410, 10);
  std::vector<GraspTrial> trials;
  for (double deg : {10.0, 20.0, 30.0}) {
    const double a = deg / kDeg;
    GraspTrial trial;
    trial.object_id = "o" + std::to_string(static_cast<int>(deg));
    trial.label = "Foam";
    trial.stages.emplace(0.0, cal(g, {std::cos(a), std::sin(a)}));
    trial.final_spectrum = cal(g, {1, 0});
    trials.push_back(std::move(trial));
  }
  const auto rows = pregrasp_consistency(trials);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].mean_sam_deg, 20.0, 1e-9);
  EXPECT_NEAR(rows[0].std_sam_deg, 10.0, 1e-9);
}

TEST(Lda, SingleInformativeChannelRanksFirst) {
  std::mt19937_64 rng(11);
  for (std::size_t ch : {0u, 7u, 19u}) {
    const auto set = two_class_set(rng, 20, ch, 0.1);
    const auto r = lda_importance(set, "A", "B", 5);
    EXPECT_EQ(r.top_k.front(), ch);
    EXPECT_TRUE(r.separable);
  }
}

TEST(Lda, MatchesFisherOracle) {
  std::mt19937_64 rng(12);
  const auto set = two_class_set(rng, 8, 3, 0.05);
  const auto r = lda_importance(set, "A", "B", 8);
  auto w = fisher_oracle(set, 1e-3);
  std::size_t lead = 0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (std::abs(w[i]) > std::abs(w[lead])) lead = i;
  const double sign = w[lead] < 0 ? -1.0 : 1.0;
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(r.coefficients[i], sign * w[i], 1e-8 * std::abs(w[lead]));
}

TEST(Lda, IdenticalMeansAreNotSeparable) {
  const auto g = grid(400, 430, 10);
  std::vector<LabeledSpectrum> set = {item("a1", "A", cal(g, {1, 2, 3, 4})), item("a2", "A", cal(g, {3, 2, 1, 0})),
                                      item("b1", "B", cal(g, {3, 2, 1, 0})), item("b2", "B", cal(g, {1, 2, 3, 4}))};
  const auto r = lda_importance(set, "A", "B", 2);
  EXPECT_FALSE(r.separable);
  for (double c : r.coefficients) EXPECT_NEAR(c, 0.0, 1e-12);
}

TEST(Lda, RankingInvariantUnderRescaling) {
  for (int trial = 0; trial < 10; ++trial) {
    std::mt19937_64 a(100 + trial), b(100 + trial);
    const auto set = two_class_set(a, 30, 11, 0.06);
    const auto big = two_class_set(b, 30, 11, 0.06, 30, 250.0);
    EXPECT_EQ(lda_importance(set, "A", "B", 10).top_k, lda_importance(big, "A", "B", 10).top_k);
  }
}

TEST(Lda, SignIsCanonical) {
  std::mt19937_64 rng(14);
  const auto set = two_class_set(rng, 12, 4, -0.1);
  const auto ab = lda_importance(set, "A", "B", 3);
  const auto ba = lda_importance(set, "B", "A", 3);
  std::size_t lead = ab.top_k.front();
  EXPECT_GT(ab.coefficients[lead], 0.0);
  for (std::size_t i = 0; i < ab.coefficients.size(); ++i) EXPECT_NEAR(ab.coefficients[i], ba.coefficients[i], 1e-12);
}

TEST(Lda, Errors) {
  std::mt19937_64 rng(15);
  const auto set = two_class_set(rng, 6, 1, 0.1, 3);
  EXPECT_THROW(lda_importance(set, "A", "B", 7), ValidationError);
  EXPECT_THROW(lda_importance(set, "A", "A", 2), ValidationError);
  EXPECT_THROW(lda_importance(set, "A", "C", 2), ValidationError);
  EXPECT_THROW(lda_importance(set, "A", "B", 2, {0.0, false}), ValidationError);
  EXPECT_THROW(lda_importance_grouped(set, "A", "B", 2), ValidationError);
  std::vector<LabeledSpectrum> none;
  EXPECT_THROW(lda_importance(none, "A", "B", 2), ValidationError);
}

TEST(Lda, GroupedAggregatesPerGroupFits) {
  std::mt19937_64 rng(16);
  auto set = two_class_set(rng, 10, 2, 0.1, 8);
  for (std::size_t i = 0; i < set.size(); ++i) set[i].group = (i % 8) < 4 ? "g1" : "g2";
  const auto r = lda_importance_grouped(set, "A", "B", 3);
  EXPECT_EQ(r.groups, 2u);
  EXPECT_EQ(r.top_k.front(), 2u);
  for (double v : r.abs_coefficients) EXPECT_LE(v, 1.0 + 1e-12);
}

TEST(Separability, Threshold) {
  EXPECT_TRUE(separability_check(25.0));
  EXPECT_FALSE(separability_check(4.34));
  EXPECT_TRUE(separability_check(20.0));
  EXPECT_FALSE(separability_check(std::nextafter(20.0, 0.0)));
  EXPECT_THROW(separability_check(-1.0), ValidationError);
  EXPECT_THROW(separability_check(181.0), ValidationError);
}

TEST(GraspTrial, Validation) {
  const auto g = grid(400, 420, 10);
  GraspTrial t;
  t.object_id = "cup";
  t.label = "Plastic";
  t.stages.emplace(0.25, cal(g, {1, 1, 1}));
  EXPECT_NO_THROW(t.validate());
  t.stages.emplace(0.3, cal(g, {1, 1, 1}));
  EXPECT_THROW(t.validate(), ValidationError);
  t.stages.erase(0.3);
  t.final_spectrum = cal(grid(400, 440, 20), {1, 1, 1});
  EXPECT_THROW(t.validate(), ValidationError);
  t.final_spectrum.reset();
  t.label.clear();
  EXPECT_THROW(t.validate(), ValidationError);
  t.label = "Plastic";
  t.sample = 2;
  EXPECT_EQ(t.trial_id(), "cup/2");
}
