#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "cine/error.hpp"
#include "cine/phantom.hpp"
#include "cine/segqc.hpp"
#include "cine/training.hpp"
#include "oracles.hpp"

using namespace cine;

namespace {

std::vector<phantom::PhantomSpec> specs(int n, std::uint64_t seed) {
  phantom::PhantomSpec base;
  base.n_frames = 10;
  return phantom::make_cohort(base, n, seed);
}

segqc::StructureMetrics metric(double dsc, double msd, double rmsd, double hd) {
  segqc::StructureMetrics m;
  m.dsc = dsc;
  m.msd_mm = msd;
  m.rmsd_mm = rmsd;
  m.hd_mm = hd;
  return m;
}

segqc::SvmModel dsc_model(double cut) {
  segqc::SvmModel m;
  m.weights = {1, 0, 0, 0};
  m.bias = -cut;
  return m;
}

segqc::Qc2Models all_models(double cut) {
  segqc::Qc2Models q;
  for (int p = 0; p < segqc::kNumPhases; ++p)
    for (int s = 0; s < kNumStructures; ++s) q.at(static_cast<segqc::Phase>(p), s) = dsc_model(cut);
  return q;
}

segqc::SegQualityMetrics uniform_metrics(double dsc) {
  segqc::SegQualityMetrics m;
  for (auto& phase : m.metrics)
    for (auto& s : phase) s = metric(dsc, 1, 1.5, 3);
  return m;
}

}  // namespace

TEST(Atlas, SaveLoadRoundTrip) {
  const auto atlas = training::phantom_atlas(specs(2, 1));
  ASSERT_EQ(atlas.entries.size(), 4u);
  const auto dir = oracle::temp_dir("atlas");
  segqc::save_atlas(atlas, dir.string());
  const auto back = segqc::load_atlas(dir.string());
  ASSERT_EQ(back.entries.size(), 4u);
  EXPECT_EQ(back.entries[3].labels.px, atlas.entries[3].labels.px);
  EXPECT_DOUBLE_EQ(back.spacing.dx_mm, atlas.spacing.dx_mm);
  for (std::size_t i = 0; i < atlas.entries[1].image.px.size(); ++i)
    EXPECT_FLOAT_EQ(back.entries[1].image.px[i], atlas.entries[1].image.px[i]);
}

TEST(Atlas, EmptyAtlasRejected) {
  segqc::Atlas empty;
  try {
    segqc::rca_predict(Image(64, 64), LabelFrame(64, 64), empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyAtlas);
  }
}

TEST(Rca, SelfAtlasPredictsHighDice) {
  const auto sp = specs(3, 2);
  const auto atlas = training::phantom_atlas(sp);
  const auto ph = phantom::generate(sp[1]);
  const auto m = segqc::rca_predict(ph.image.magnitude_frame(0, 0), ph.labels.frame(0, 0), atlas);
  for (const auto& s : m) {
    EXPECT_GE(s.dsc, 0.95);
    EXPECT_TRUE(s.defined);
    EXPECT_LE(s.msd_mm, s.rmsd_mm + 1e-9);
    EXPECT_LE(s.rmsd_mm, s.hd_mm + 1e-9);
  }
}

TEST(Rca, EmptySegmentationFailsQc2) {
  const auto atlas = training::phantom_atlas(specs(2, 3));
  const auto ph = phantom::generate(specs(1, 4)[0]);
  const auto m = segqc::rca_predict(ph.image.magnitude_frame(0, 0), LabelFrame(64, 64), atlas);
  segqc::SegQualityMetrics all = uniform_metrics(0.99);
  for (const auto& s : m) EXPECT_FALSE(s.defined);
  all.at(segqc::Phase::ED, 0) = m[0];
  EXPECT_FALSE(segqc::qc2_predict(all_models(0.5), all).pass);
}

TEST(Rca, ErosionLowersPredictedDice) {
  const auto atlas = training::phantom_atlas(specs(4, 5));
  const auto test = specs(3, 6);
  for (const auto& spec : test) {
    const auto ph = phantom::generate(spec);
    const segqc::RcaContext ctx(ph.image.magnitude_frame(0, 0), atlas);
    const auto intact = ctx.predict(ph.labels.frame(0, 0));
    const auto eroded = ctx.predict(training::erode(ph.labels.frame(0, 0), 3));
    for (int s = 0; s < kNumStructures; ++s) EXPECT_LT(eroded[s].dsc, intact[s].dsc) << s;
  }
}

TEST(Rca, ContextMatchesOneShotPrediction) {
  const auto atlas = training::phantom_atlas(specs(2, 7));
  const auto ph = phantom::generate(specs(1, 8)[0]);
  const Image img = ph.image.magnitude_frame(0, 0);
  const auto seg = ph.labels.frame(0, 0);
  const auto a = segqc::RcaContext(img, atlas).predict(seg);
  const auto b = segqc::rca_predict(img, seg, atlas);
  for (int s = 0; s < kNumStructures; ++s) {
    EXPECT_EQ(a[s].dsc, b[s].dsc);
    EXPECT_EQ(a[s].hd_mm, b[s].hd_mm);
  }
  segqc::RcaOptions o;
  o.direction = segqc::Direction::TestToTemplate;
  for (const auto& s : segqc::rca_predict(img, seg, atlas, o)) EXPECT_GT(s.dsc, 0.8);
}

TEST(Svm, SeparableToyData) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 0.02);
  std::vector<segqc::StructureMetrics> m;
  std::vector<int> y;
  for (int i = 0; i < 50; ++i) {
    m.push_back(metric(0.95 + n(rng), 1 + n(rng), 1.3 + n(rng), 3 + n(rng)));
    y.push_back(1);
    m.push_back(metric(0.3 + n(rng), 8 + n(rng), 9 + n(rng), 15 + n(rng)));
    y.push_back(0);
  }
  const auto t = segqc::qc2_train(m, y, {});
  EXPECT_EQ(t.train.balanced_accuracy, 1.0);
  EXPECT_TRUE(t.model.good(metric(0.96, 1, 1.2, 2.5)));
  EXPECT_FALSE(t.model.good(metric(0.2, 9, 10, 16)));
  auto undefined = metric(0.96, 1, 1.2, 2.5);
  undefined.defined = false;
  EXPECT_FALSE(t.model.good(undefined));
}

TEST(Svm, DeterministicGivenSeed) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<segqc::StructureMetrics> m;
  std::vector<int> y;
  for (int i = 0; i < 60; ++i) {
    m.push_back(metric(u(rng), 5 * u(rng), 6 * u(rng), 10 * u(rng)));
    y.push_back(m.back().dsc > 0.5);
  }
  segqc::SvmOptions o;
  o.seed = 4;
  const auto a = segqc::qc2_train(m, y, o), b = segqc::qc2_train(m, y, o);
  EXPECT_EQ(a.model.weights, b.model.weights);
  EXPECT_EQ(a.model.bias, b.model.bias);
}

TEST(Svm, PermutedLabelsGiveChanceOnHoldout) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  auto sample = [&] { return metric(u(rng), 5 * u(rng), 6 * u(rng), 10 * u(rng)); };
  std::vector<segqc::StructureMetrics> train, held;
  std::vector<int> ytrain, yheld;
  for (int i = 0; i < 1000; ++i) {
    train.push_back(sample());
    ytrain.push_back(train.back().dsc > 0.5);
    held.push_back(sample());
    yheld.push_back(held.back().dsc > 0.5);
  }
  std::shuffle(ytrain.begin(), ytrain.end(), rng);
  const auto t = segqc::qc2_train(train, ytrain, {});
  std::vector<int> pred;
  for (const auto& m : held) pred.push_back(t.model.good(m));
  EXPECT_NEAR(imgqc::classification_stats(yheld, pred).balanced_accuracy, 0.5, 0.1);
}

TEST(Svm, SingleClassRejected) {
  std::vector<segqc::StructureMetrics> m(12, metric(0.9, 1, 1, 2));
  std::vector<int> y(12, 1);
  try {
    segqc::qc2_train(m, y, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateLabels);
  }
}

TEST(Qc2, ConjunctionOfVotes) {
  const auto models = all_models(0.8);
  EXPECT_TRUE(segqc::qc2_predict(models, uniform_metrics(0.9)).pass);
  auto m = uniform_metrics(0.9);
  m.at(segqc::Phase::ES, 2).dsc = 0.5;
  const auto v = segqc::qc2_predict(models, m);
  EXPECT_FALSE(v.pass);
  EXPECT_FALSE(v.votes[1][2]);
  EXPECT_TRUE(v.votes[0][2]);
}

TEST(Qc2, MissingModel) {
  auto models = all_models(0.8);
  models.at(segqc::Phase::ED, 1).reset();
  try {
    segqc::qc2_predict(models, uniform_metrics(0.9));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingModel);
  }
}

TEST(Qc2, ModelTextRoundTrip) {
  auto models = all_models(0.8);
  models.at(segqc::Phase::ES, 1)->weights = {0.1, -0.2, 1.0 / 3.0, 4};
  models.at(segqc::Phase::ES, 1)->sd = {1, 2, 3, 4};
  std::stringstream ss;
  segqc::write_qc2_models(ss, models);
  const auto back = segqc::read_qc2_models(ss);
  for (int p = 0; p < 2; ++p)
    for (int s = 0; s < 3; ++s) {
      const auto& a = *models.at(static_cast<segqc::Phase>(p), s);
      const auto& b = back.at(static_cast<segqc::Phase>(p), s);
      ASSERT_TRUE(b.has_value());
      EXPECT_EQ(a.weights, b->weights);
      EXPECT_EQ(a.bias, b->bias);
      EXPECT_EQ(a.sd, b->sd);
    }
  std::istringstream bad("ED.LVBP.nonsense=1\n");
  EXPECT_THROW(segqc::read_qc2_models(bad), Error);
}

TEST(Perturb, ErodeDilateShift) {
  LabelFrame l(16, 16);
  for (int y = 4; y < 12; ++y)
    for (int x = 4; x < 12; ++x) l(x, y) = 1;
  const auto e = training::erode(l, 1), d = training::dilate(l, 1), s = training::shift(l, 2, 0);
  auto count = [](const LabelFrame& f) { return std::count(f.px.begin(), f.px.end(), 1); };
  EXPECT_EQ(count(e), 36);
  EXPECT_EQ(count(d), 64 + 32);
  EXPECT_EQ(count(s), 64);
  EXPECT_EQ(s(12, 4), 1);
  EXPECT_EQ(s(4, 4), 0);
}
