#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "optimice/criteria.hpp"
#include "oracles.hpp"

using namespace optimice;

namespace {

Eigen::VectorXd v1(double a) { return Eigen::VectorXd::Constant(1, a); }

GpModel model_1d(std::initializer_list<double> xs, double ls, double s2 = 1.0, double jitter = 1e-10) {
  DesignSet d{Eigen::MatrixXd(static_cast<Eigen::Index>(xs.size()), 1),
              Eigen::VectorXd(static_cast<Eigen::Index>(xs.size()))};
  Eigen::Index i = 0;
  for (double x : xs) {
    d.inputs(i, 0) = x;
    d.outputs[i] = std::sin(7 * x);
    ++i;
  }
  return GpModel::condition(d, BoxDomain::unit(1), KernelConfig::power_exponential(v1(ls)), s2, jitter);
}

Eigen::MatrixXd random_points(Rng& rng, Eigen::Index n, int d) {
  Eigen::MatrixXd p(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) p(i, j) = rng.uniform();
  return p;
}

Eigen::MatrixXd drop_row(const Eigen::MatrixXd& m, Eigen::Index r) {
  Eigen::MatrixXd out(m.rows() - 1, m.cols());
  out.topRows(r) = m.topRows(r);
  out.bottomRows(m.rows() - 1 - r) = m.bottomRows(m.rows() - 1 - r);
  return out;
}

}  // namespace

TEST(CandidateSet, Validation) {
  const auto dom = BoxDomain::unit(2);
  CandidateSet empty{Eigen::MatrixXd(0, 2)};
  EXPECT_THROW(empty.validate(dom), ConfigError);
  CandidateSet dup{Eigen::MatrixXd(2, 2)};
  dup.points << 0.1, 0.2, 0.1, 0.2;
  EXPECT_THROW(dup.validate(dom), ConfigError);
  dup.points(1, 1) = 0.3;
  EXPECT_NO_THROW(dup.validate(dom));
}

TEST(Alm, ZeroAtTrainingPoint) {
  const auto m = model_1d({0.1, 0.5, 0.9}, 0.1, 1.0, 1e-12);
  EXPECT_NEAR(alm_score(m, {}, v1(0.5)), 0.0, 1e-10);
}

TEST(Alm, EqualsAugmentedVariance) {
  Rng rng(1);
  const auto m = oracle::random_model(rng, 2, 6);
  const std::vector<Eigen::VectorXd> pending{Eigen::Vector2d(0.3, 0.3), Eigen::Vector2d(0.8, 0.1)};
  const Eigen::VectorXd x = Eigen::Vector2d(0.5, 0.5);
  EXPECT_EQ(alm_score(m, pending, x), predict_with_augmented(m, pending, x));
}

TEST(Alm, ArgmaxInLargestGap) {
  const auto m = model_1d({0.0, 0.2, 1.0}, 0.05);
  Eigen::VectorXd scores(100);
  for (int i = 0; i < 100; ++i) scores[i] = alm_score(m, {}, v1(i / 99.0));
  const double best = static_cast<double>(argmax_first(scores)) / 99.0;
  EXPECT_GT(best, 0.2);
  EXPECT_LT(best, 1.0);
}

TEST(Alc, ZeroForTrainingPoint) {
  const auto m = model_1d({0.1, 0.5, 0.9}, 0.2, 1.0, 1e-12);
  Eigen::MatrixXd ref(5, 1);
  ref << 0.0, 0.25, 0.4, 0.7, 1.0;
  EXPECT_NEAR(alc_score(m, {}, v1(0.5), ref), 0.0, 1e-8);
}

TEST(Alc, SelfReferenceMatchesRefitOracle) {
  Rng rng(2);
  for (int inst = 0; inst < 10; ++inst) {
    const auto m = oracle::random_model(rng, 2, 7);
    const Eigen::VectorXd x = random_points(rng, 1, 2).row(0).transpose();
    DesignSet aug{m.inputs(), m.outputs()};
    aug.inputs.conservativeResize(aug.inputs.rows() + 1, Eigen::NoChange);
    aug.inputs.bottomRows(1) = x.transpose();
    aug.outputs.conservativeResize(aug.outputs.size() + 1);
    aug.outputs[aug.outputs.size() - 1] = 0.0;
    const auto refit = GpModel::condition(aug, m.domain(), m.kernel(), m.process_variance(), m.jitter(), m.jitter());
    const double want = m.predict(x).variance - refit.predict(x).variance;
    EXPECT_NEAR(alc_score(m, {}, x, x.transpose()), want, 1e-8);
  }
}

TEST(Alc, SummandsNonNegative) {
  Rng rng(3);
  const auto m = oracle::random_model(rng, 3, 12);
  const Eigen::MatrixXd ref = random_points(rng, 40, 3);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd x = random_points(rng, 1, 3).row(0).transpose();
    for (Eigen::Index r = 0; r < ref.rows(); ++r) EXPECT_GE(alc_score(m, {}, x, ref.row(r)), -1e-8);
  }
}

TEST(Alc, DominatesAlmInIntegratedVarianceReduction) {
  double alc_total = 0.0, alm_total = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto m = oracle::random_model(rng, 1, 4);
    const CandidateSet cand{random_points(rng, 30, 1)};
    auto integrated_after = [&](const Eigen::VectorXd& x) {
      AugmentedPosterior post(m, cand.points);
      post.add_pending(x);
      return post.variances().mean();
    };
    alc_total += integrated_after(select_best(Criterion::ALC, m, {}, cand).point);
    alm_total += integrated_after(select_best(Criterion::ALM, m, {}, cand).point);
  }
  EXPECT_LE(alc_total, alm_total + 1e-12);
}

TEST(Mice, FarUnselectedGivesPriorDenominator) {
  const auto m = model_1d({0.0, 0.1}, 1e-4);
  CandidateSet far{Eigen::MatrixXd(3, 1)};
  far.points << 0.8, 0.9, 1.0;
  const Eigen::VectorXd x = v1(0.4);
  const double num = alm_score(m, {}, x) / m.process_variance();
  const double prior = 1.0 + 1.0 + m.jitter();
  EXPECT_NEAR(mice_denominator(m, x, far.points, 1.0), prior, 1e-12);
  EXPECT_NEAR(mice_score(m, {}, x, far, 1.0), num / prior, 1e-12);
}

TEST(Mice, DenominatorMatchesDenseOracle) {
  Rng rng(4);
  for (int inst = 0; inst < 10; ++inst) {
    const auto m = oracle::random_model(rng, 2, 5);
    const Eigen::MatrixXd unsel = random_points(rng, 8, 2);
    const Eigen::VectorXd x = random_points(rng, 1, 2).row(0).transpose();
    const double tau = 0.5 + inst * 0.1;
    Eigen::MatrixXd all(9, 2);
    all.topRows(8) = unsel;
    all.row(8) = x.transpose();
    Eigen::MatrixXd c = oracle::corr_matrix(m.kernel(), all);
    c.diagonal().array() += tau + m.jitter();
    const Eigen::MatrixXd cu = c.topLeftCorner(8, 8);
    const Eigen::VectorXd r = c.col(8).head(8);
    const double want = c(8, 8) - r.dot(cu.fullPivLu().inverse() * r);
    EXPECT_NEAR(mice_denominator(m, x, unsel, tau), want, 1e-10);
  }
}

TEST(Mice, InvariantToProcessVariance) {
  Rng rng(5);
  const auto base = oracle::random_model(rng, 2, 6);
  const CandidateSet unsel{random_points(rng, 10, 2)};
  const Eigen::VectorXd x = Eigen::Vector2d(0.42, 0.58);
  const std::vector<Eigen::VectorXd> pending{Eigen::Vector2d(0.1, 0.9)};
  const double ref = mice_score(base, pending, x, unsel, 1.0);
  for (double c : {1e-3, 0.5, 7.0, 1e4}) {
    const auto scaled = GpModel::condition({base.inputs(), base.outputs() * std::sqrt(c)}, base.domain(), base.kernel(),
                                           base.process_variance() * c, base.jitter(), base.jitter());
    EXPECT_NEAR(mice_score(scaled, pending, x, unsel, 1.0), ref, 1e-10 * ref);
  }
}

TEST(Mice, PositiveAndRejectsSelfInUnselected) {
  Rng rng(6);
  const auto m = oracle::random_model(rng, 2, 6);
  CandidateSet unsel{random_points(rng, 10, 2)};
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd x = random_points(rng, 1, 2).row(0).transpose();
    EXPECT_GT(mice_score(m, {}, x, unsel, 1.0), 0.0);
  }
  EXPECT_THROW(mice_score(m, {}, unsel.point(3), unsel, 1.0), ConfigError);
  EXPECT_THROW(mice_score(m, {}, unsel.point(3), CandidateSet{Eigen::MatrixXd(0, 2)}, 1.0), ConfigError);
}

TEST(Mice, DegenerateDenominatorNamesPoint) {
  // Long lengthscale, no nugget and a tiny jitter: a near-copy of an unselected point
  // has almost nothing left to explain.
  const auto m = model_1d({0.0, 1.0}, 5.0, 1.0, 1e-15);
  CandidateSet unsel{Eigen::MatrixXd(1, 1)};
  unsel.points << 0.5;
  try {
    mice_score(m, {}, v1(0.5 + 1e-9), unsel, 0.0);
    FAIL() << "expected DegenerateGeometryError";
  } catch (const DegenerateGeometryError& e) {
    EXPECT_NEAR(e.point()[0], 0.5 + 1e-9, 1e-15);
  }
}

TEST(Mice, ArgmaxMatchesMutualInformationOracle) {
  // 1D grid of 8 points; 2 are selected (the training set). For each of the other 6,
  // the exact entropy-based gain over the full joint is compared at the argmax level.
  for (double ls : {0.02, 0.05, 0.1, 0.3}) {
    for (int first = 0; first < 4; ++first) {
      Eigen::MatrixXd grid(8, 1);
      for (int i = 0; i < 8; ++i) grid(i, 0) = i / 7.0;
      const std::vector<int> selected{first, 7 - first / 2};
      DesignSet d{Eigen::MatrixXd(2, 1), Eigen::VectorXd(2)};
      d.inputs << grid(selected[0], 0), grid(selected[1], 0);
      d.outputs << 0.3, -0.2;
      const auto m = GpModel::condition(d, BoxDomain::unit(1), KernelConfig::power_exponential(v1(ls)), 1.0, 1e-10);
      const double tau = 1.0;

      Eigen::MatrixXd plain = oracle::corr_matrix(m.kernel(), grid);
      Eigen::MatrixXd nug = plain;
      plain.diagonal().array() += m.jitter();
      nug.diagonal().array() += tau + m.jitter();

      std::vector<int> remaining;
      for (int i = 0; i < 8; ++i)
        if (i != selected[0] && i != selected[1]) remaining.push_back(i);
      Eigen::VectorXd mice(6), mi(6);
      for (int k = 0; k < 6; ++k) {
        const int x = remaining[static_cast<std::size_t>(k)];
        std::vector<int> rest;
        for (int r : remaining)
          if (r != x) rest.push_back(r);
        Eigen::MatrixXd rest_pts(static_cast<Eigen::Index>(rest.size()), 1);
        for (std::size_t j = 0; j < rest.size(); ++j) rest_pts(static_cast<Eigen::Index>(j), 0) = grid(rest[j], 0);
        mice[k] = mice_score(m, {}, grid.row(x).transpose(), CandidateSet{rest_pts}, tau);
        mi[k] = oracle::mi_gain(plain, nug, selected, rest, x);
      }
      EXPECT_EQ(argmax_first(mice), argmax_first(mi)) << "ls=" << ls << " first=" << first;
      // The gain is half the log of the score.
      for (int k = 0; k < 6; ++k) EXPECT_NEAR(mi[k], 0.5 * std::log(mice[k]), 1e-6);
    }
  }
}

TEST(Mice, GainOracleAgreesWithJointMutualInformation) {
  Rng rng(7);
  const auto k = KernelConfig::power_exponential(v1(0.2));
  const Eigen::MatrixXd pts = random_points(rng, 7, 1);
  Eigen::MatrixXd cov = oracle::corr_matrix(k, pts);
  cov.diagonal().array() += 0.3;
  const std::vector<int> sel{0, 1}, rest{2, 3, 5, 6};
  EXPECT_NEAR(oracle::mi_gain(cov, cov, sel, rest, 4), oracle::mi_difference(cov, sel, rest, 4), 1e-9);
}

TEST(Mice, BatchedScoresMatchPointwise) {
  Rng rng(8);
  const auto m = oracle::random_model(rng, 2, 6);
  const Eigen::MatrixXd cand = random_points(rng, 25, 2);
  AugmentedPosterior post(m, cand);
  post.add_pending(Eigen::Vector2d(0.5, 0.5));
  std::vector<bool> avail(25, true);
  avail[3] = avail[17] = false;
  Rng unused(0);
  const Eigen::VectorXd scores = mice_scores(m, post, cand, avail, 1.0, 200, unused);
  for (Eigen::Index i = 0; i < 25; ++i) {
    if (!avail[static_cast<std::size_t>(i)]) {
      EXPECT_TRUE(std::isinf(scores[i]) && scores[i] < 0);
      continue;
    }
    std::vector<Eigen::Index> others;
    for (Eigen::Index j = 0; j < 25; ++j)
      if (j != i && avail[static_cast<std::size_t>(j)]) others.push_back(j);
    CandidateSet rest{Eigen::MatrixXd(static_cast<Eigen::Index>(others.size()), 2)};
    for (std::size_t j = 0; j < others.size(); ++j) rest.points.row(static_cast<Eigen::Index>(j)) = cand.row(others[j]);
    const double want = mice_score(m, post.pending(), cand.row(i).transpose(), rest, 1.0);
    EXPECT_NEAR(scores[i], want, 1e-8 * std::abs(want));
  }
}

TEST(Mice, CappedScoresUseSharedSubsample) {
  Rng rng(9);
  const auto m = oracle::random_model(rng, 2, 6);
  const Eigen::MatrixXd cand = random_points(rng, 30, 2);
  AugmentedPosterior post(m, cand);
  std::vector<bool> avail(30, true);
  const std::size_t cap = 10;
  Rng a(77), replay(77);
  const Eigen::VectorXd scores = mice_scores(m, post, cand, avail, 1.0, cap, a);
  auto picks = replay.sample_without_replacement(30, cap);
  std::sort(picks.begin(), picks.end());
  Eigen::MatrixXd grid(static_cast<Eigen::Index>(cap), 2);
  for (std::size_t j = 0; j < cap; ++j) grid.row(static_cast<Eigen::Index>(j)) = cand.row(static_cast<Eigen::Index>(picks[j]));
  for (Eigen::Index i = 0; i < 30; ++i) {
    const auto it = std::find(picks.begin(), picks.end(), static_cast<std::size_t>(i));
    const Eigen::MatrixXd unsel =
        it == picks.end() ? grid : drop_row(grid, static_cast<Eigen::Index>(it - picks.begin()));
    const double num = post.variance(i) / m.process_variance();
    const double want = num / mice_denominator(m, cand.row(i).transpose(), unsel, 1.0);
    EXPECT_NEAR(scores[i], want, 1e-8 * std::abs(want));
  }
}

TEST(SelectBest, SingleCandidate) {
  Rng rng(10);
  const auto m = oracle::random_model(rng, 2, 5);
  const CandidateSet one{random_points(rng, 1, 2)};
  for (auto c : {Criterion::ALM, Criterion::ALC, Criterion::MICE}) {
    const auto s = select_best(c, m, {}, one);
    EXPECT_EQ(s.index, 0);
    EXPECT_EQ(s.point, one.point(0));
  }
}

TEST(SelectBest, TiesGoToFirst) {
  // Every candidate is far from the data, so ALM scores are the identical prior variance.
  const auto m = model_1d({0.0, 0.01}, 1e-5);
  CandidateSet cand{Eigen::MatrixXd(4, 1)};
  cand.points << 0.9, 0.5, 0.7, 0.3;
  EXPECT_EQ(select_best(Criterion::ALM, m, {}, cand).index, 0);
  Eigen::VectorXd flat = Eigen::VectorXd::Constant(5, 2.0);
  EXPECT_EQ(argmax_first(flat), 0);
  flat[2] = std::nan("");
  flat[4] = 3.0;
  EXPECT_EQ(argmax_first(flat), 4);
  EXPECT_EQ(argmax_first(Eigen::VectorXd::Constant(3, std::nan(""))), -1);
}

TEST(SelectBest, MatchesExhaustiveScoring) {
  Rng rng(11);
  const auto m = oracle::random_model(rng, 2, 6);
  const CandidateSet cand{random_points(rng, 20, 2)};
  const std::vector<Eigen::VectorXd> pending{Eigen::Vector2d(0.2, 0.7)};
  for (auto c : {Criterion::ALM, Criterion::ALC, Criterion::MICE}) {
    Eigen::VectorXd scores(20);
    for (Eigen::Index i = 0; i < 20; ++i) {
      const Eigen::VectorXd x = cand.point(i);
      if (c == Criterion::ALM) scores[i] = alm_score(m, pending, x);
      if (c == Criterion::ALC) scores[i] = alc_score(m, pending, x, cand.points);
      if (c == Criterion::MICE) scores[i] = mice_score(m, pending, x, CandidateSet{drop_row(cand.points, i)}, 1.0);
    }
    const auto s = select_best(c, m, pending, cand);
    EXPECT_EQ(s.index, argmax_first(scores));
    EXPECT_DOUBLE_EQ(s.score, scores[s.index]);
  }
}

TEST(SelectBest, ArgmaxInvariantToOutputScale) {
  Rng rng(12);
  const auto base = oracle::random_model(rng, 2, 8);
  const CandidateSet cand{random_points(rng, 25, 2)};
  for (double c : {0.01, 3.0, 250.0}) {
    const auto scaled = GpModel::condition({base.inputs(), base.outputs() * c}, base.domain(), base.kernel(),
                                           base.process_variance() * c * c, base.jitter(), base.jitter());
    for (auto crit : {Criterion::ALM, Criterion::ALC, Criterion::MICE})
      EXPECT_EQ(select_best(crit, base, {}, cand).index, select_best(crit, scaled, {}, cand).index);
  }
}
