#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ysm/oracle.hpp"
#include "ysm/simon_model.hpp"
#include "ysm/stats.hpp"

using namespace ysm;

namespace {

ModelParams params(double p, double alpha, std::uint64_t n, std::uint64_t seed = 1) {
  ModelParams mp;
  mp.p = p;
  mp.alpha = alpha;
  mp.n = n;
  mp.seed = seed;
  return mp;
}

}  // namespace

TEST(ModelParams, Validation) {
  EXPECT_THROW(params(0.0, 1.0, 10).validate(), std::invalid_argument);
  EXPECT_THROW(params(1.0, 1.0, 10).validate(), std::invalid_argument);
  EXPECT_THROW(params(0.5, -0.1, 10).validate(), std::invalid_argument);
  EXPECT_THROW(params(0.5, 1.0, 0).validate(), std::invalid_argument);
  EXPECT_NO_THROW(params(0.5, 0.0, 1).validate());
}

TEST(Step, FirstRepetitionCopiesWordOne) {
  const auto mp = params(1e-12, 1.0, 2);
  PowerWeightTable table(1.0);
  StringState s;
  s.start();
  Rng rng(3);
  step(s, table, mp, rng);
  ASSERT_EQ(s.length(), 2u);
  EXPECT_EQ(s.word_at(2), s.word_at(1));
  EXPECT_EQ(s.count_of_word[0], 2u);
}

TEST(Step, SecondRepetitionFollowsWeights) {
  const auto mp = params(1e-12, 1.0, 3);
  PowerWeightTable table(1.0, 3);
  StringState base;
  base.start();
  base.count_of_word.push_back(1);
  base.word_of_index.push_back(1);  // w_1 != w_2
  Rng rng(11);
  const int trials = 300000;
  int copies_second = 0;
  for (int i = 0; i < trials; ++i) {
    StringState s = base;
    step(s, table, mp, rng);
    copies_second += s.word_at(3) == 1;
  }
  const double f = static_cast<double>(copies_second) / trials;
  EXPECT_NEAR(f, 2.0 / 3.0, 4.0 * std::sqrt(2.0 / 9.0 / trials));
}

TEST(Run, LengthOne) {
  const auto h = run(params(0.3, 1.0, 1));
  EXPECT_EQ(h.n, 1u);
  EXPECT_EQ(h.at(1), 1u);
  EXPECT_EQ(h.distinct, 1u);
}

TEST(Run, LengthTwoRepetitionGivesOnePair) {
  int repeats = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto h = run(params(0.5, 1.0, 2, seed));
    ASSERT_TRUE(h.conserved());
    if (h.distinct == 1) {
      ++repeats;
      EXPECT_EQ(h.at(2), 1u);
      EXPECT_EQ(h.at(1), 0u);
    } else {
      EXPECT_EQ(h.at(1), 2u);
    }
  }
  EXPECT_GT(repeats, 0);
}

TEST(Run, NearCertainInnovationGivesAllDistinct) {
  const auto h = run(params(1.0 - 1e-12, 2.0, 5000));
  EXPECT_EQ(h.at(1), 5000u);
  EXPECT_EQ(h.distinct, 5000u);
}

TEST(Run, HistogramConservesMass) {
  for (double alpha : {0.0, 0.7, 2.0}) {
    const auto h = run(params(0.2, alpha, 20000, 17));
    EXPECT_TRUE(h.conserved());
    std::uint64_t mass = 0;
    for (const auto& [ell, c] : h.counts) mass += ell * c;
    EXPECT_EQ(mass, 20000u);
  }
}

TEST(Run, ExpectedDistinctCount) {
  const double p = 0.3;
  const std::uint64_t n = 200;
  stats::RunningStats d;
  for (std::uint64_t r = 0; r < 10000; ++r) d.add(static_cast<double>(run(params(p, 1.0, n, stream_seed(8, r))).distinct));
  EXPECT_NEAR(d.mean(), 1.0 + static_cast<double>(n - 1) * p, 4.0 * d.stderr_mean());
}

TEST(Run, SameSeedSameHistogram) {
  const auto a = run(params(0.4, 1.3, 5000, 42));
  const auto b = run(params(0.4, 1.3, 5000, 42));
  EXPECT_EQ(a.counts, b.counts);
}

TEST(Run, SimonCaseSingletonsAndPairs) {
  const auto h = run(params(0.5, 0.0, 1000000, 7));
  const auto norm = normalized_histogram(h, 0.5);
  EXPECT_NEAR(norm.at(1), 2.0 / 3.0, 0.01);
  EXPECT_NEAR(norm.at(2), 1.0 / 6.0, 0.01);
}

TEST(NormalizedHistogram, SmallExamples) {
  OccurrenceHistogram a;
  a.n = 2;
  a.distinct = 2;
  a.counts = {{1, 2}};
  EXPECT_DOUBLE_EQ(normalized_histogram(a, 0.5).at(1), 2.0);
  OccurrenceHistogram b;
  b.n = 2;
  b.distinct = 1;
  b.counts = {{2, 1}};
  EXPECT_DOUBLE_EQ(normalized_histogram(b, 0.5).at(2), 1.0);
}

TEST(Identity, CountEqualsStrictIncreasesOfAttraction) {
  for (double alpha : {0.0, 0.5, 1.0, 2.5}) {
    const auto mp = params(0.3, alpha, 400, 5);
    PowerWeightTable table(alpha, 400);
    StringState s;
    Rng rng(21);
    grow(s, table, mp, rng);
    for (std::size_t j = 1; j <= 400; ++j) {
      if (!s.is_new(j)) continue;
      std::uint64_t increases = 0;
      double prev = attraction(s, j, j, alpha);
      EXPECT_DOUBLE_EQ(prev, 1.0);
      for (std::size_t k = j; k < 400; ++k) {
        const double next = attraction(s, j, k + 1, alpha);
        increases += next > prev;
        prev = next;
      }
      ASSERT_EQ(occurrence_count(s, j, 400), increases + 1) << "alpha=" << alpha << " j=" << j;
    }
  }
}

TEST(Tagged, BeforeBirthIsZero) {
  const std::vector<double> tags{0.5};
  const std::vector<double> grid{0.25, 0.5, 1.0};
  const auto tr = run_tagged(params(0.5, 1.0, 100, 9), tags, grid);
  ASSERT_EQ(tr.trajectories.size(), 1u);
  const auto& s = tr.trajectories[0].samples;
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].count, 0u);
  EXPECT_EQ(s[0].attraction, 0.0);
  EXPECT_EQ(s[1].count, 1u);
  EXPECT_DOUBLE_EQ(s[1].attraction, 1.0);
  EXPECT_GE(s[2].count, 1u);
  EXPECT_GE(tr.attempts, 1u);
}

TEST(Tagged, RejectsBadGrids) {
  const std::vector<double> tags{0.5};
  const std::vector<double> unsorted{0.5, 0.25};
  const std::vector<double> outside{1.5};
  const std::vector<double> bad_tag{1.0};
  const std::vector<double> grid{1.0};
  EXPECT_THROW(run_tagged(params(0.5, 1.0, 100), tags, unsorted), std::invalid_argument);
  EXPECT_THROW(run_tagged(params(0.5, 1.0, 100), tags, outside), std::invalid_argument);
  EXPECT_THROW(run_tagged(params(0.5, 1.0, 100), bad_tag, grid), std::invalid_argument);
}

TEST(Tagged, MidpointCountFollowsGeometricLaw) {
  // alpha = 0, p = 1/2: N at n for a word born at n/2 is geometric with success e^{-pbar ln 2}.
  const std::vector<double> tags{0.5};
  const std::vector<double> grid{1.0};
  const int reps = 4000;
  std::vector<int> hist(8, 0);
  for (int r = 0; r < reps; ++r) {
    const auto tr = run_tagged(params(0.5, 0.0, 2000, stream_seed(31, r)), tags, grid);
    const auto c = tr.trajectories[0].samples[0].count;
    ++hist[std::min<std::uint64_t>(c, 7)];
  }
  const double t = 0.5 * std::log(2.0);
  for (std::uint64_t k = 1; k <= 5; ++k) {
    const double pk = oracle::geometric_pmf(t, k);
    const double f = static_cast<double>(hist[k]) / reps;
    EXPECT_NEAR(f, pk, 4.0 * std::sqrt(pk * (1 - pk) / reps)) << "k=" << k;
  }
}
