#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qrepath/normal_form.h"
#include "qrepath/qre_system.h"
#include "qrepath/sequence_form.h"
#include "testing.h"

namespace qrepath {
namespace {

using testing::MaxAbsDiff;
using testing::SeltenGame;

double LogSumExp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

class SeltenQre : public ::testing::Test {
 protected:
  GameTree game = SeltenGame();
  SequenceSpace space = SequenceSpace::Compile(game);
  NormalForm nf = NormalForm::Build(game);
  std::mt19937_64 rng{17};
};

TEST_F(SeltenQre, InstanceValidation) {
  EXPECT_THROW(QreInstance(space, 0.0), std::invalid_argument);
  EXPECT_THROW(QreInstance(space, 1.5), std::invalid_argument);
  RealizationProfile bad = testing::RandomPlan(space, rng);
  bad[0][1] = 0.0;
  EXPECT_THROW(QreInstance(space, 0.5, bad), std::invalid_argument);
  RealizationProfile infeasible = testing::RandomPlan(space, rng);
  infeasible[1][1] *= 1.1;
  EXPECT_THROW(QreInstance(space, 0.5, infeasible), std::invalid_argument);
  const QreInstance inst(space, 0.2);
  EXPECT_DOUBLE_EQ(inst.rationality(), 4.0);
  EXPECT_FALSE(inst.anchored());
  EXPECT_EQ(inst.AnchorLogRatio(0, 1), 0.0);
}

TEST_F(SeltenQre, ResidualRejectsBoundary) {
  const QreInstance inst(space, 0.5);
  EXPECT_THROW(ResidualGammaSystem(inst, testing::SeltenTypeC(),
                                   Eigen::VectorXd::Zero(space.num_infoset_slots())),
               std::invalid_argument);
}

TEST_F(SeltenQre, AnchoredStartIsExact) {
  const RealizationProfile anchor = testing::RandomPlan(space, rng);
  const QreInstance inst(space, 1.0, anchor);
  const Eigen::VectorXd nu = RecoverMultipliers(inst, anchor);
  EXPECT_LE(nu.lpNorm<Eigen::Infinity>(), 1e-14);
  EXPECT_LE(ResidualGammaSystem(inst, anchor, nu).lpNorm<Eigen::Infinity>(), 1e-14);
  const FixedTSolution sol = SolveFixedT(inst, anchor);
  EXPECT_TRUE(sol.converged);
  EXPECT_LE(sol.iterations, 1);
  EXPECT_LE(MaxAbsDiff(sol.gamma, anchor), 1e-14);
}

TEST_F(SeltenQre, FixedTMatchesOracle) {
  for (double t : {0.9, 0.5, 0.2}) {
    const QreInstance inst(space, t);
    const FixedTSolution sol = SolveFixedTByContinuation(inst);
    ASSERT_TRUE(sol.converged) << t;
    EXPECT_LE(sol.residual, 1e-10);
    const QreSolution oracle = SolveLogitQre(nf, inst.rationality());
    EXPECT_LE(MaxAbsDiff(sol.gamma, RealizationOf(space, oracle.sigma)), 1e-8) << t;
  }
}

TEST_F(SeltenQre, AnchoredFixedTIsInT) {
  const RealizationProfile anchor = testing::RandomPlan(space, rng);
  const QreInstance inst(space, 0.5, anchor);
  const FixedTSolution sol = SolveFixedTByContinuation(inst);
  ASSERT_TRUE(sol.converged);
  const MixedProfile sigma = SigmaE(inst, nf, sol.gamma);
  EXPECT_LE(MaxAbsDiff(RealizationOf(space, sigma), sol.gamma), 1e-8);
  const MixedProfile anchor_sigma = MixedOf(space, anchor);
  EXPECT_LE(QreResidual(nf, sigma, inst.rationality(), anchor_sigma), 1e-8);
}

TEST_F(SeltenQre, SolutionsAreLogitEquilibria) {
  for (bool anchored : {false, true}) {
    std::optional<RealizationProfile> anchor;
    if (anchored) anchor = testing::RandomPlan(space, rng);
    for (double t : {0.9, 0.5, 0.2}) {
      const QreInstance inst(space, t, anchor);
      const FixedTSolution sol = SolveFixedTByContinuation(inst);
      ASSERT_TRUE(sol.converged);
      const MixedProfile sigma = SigmaE(inst, nf, sol.gamma);
      std::optional<MixedProfile> weights;
      if (anchored) weights = MixedOf(space, *anchor);
      const MixedProfile response = LogitResponse(nf, sigma, inst.rationality(), weights);
      EXPECT_LE(MaxAbsDiff(sigma, response), 1e-8);
      EXPECT_LE(MaxAbsDiff(RealizationOf(space, sigma), sol.gamma), 1e-8);
    }
  }
}

TEST_F(SeltenQre, LogitEquilibriaSolveTheSystem) {
  for (double lambda : {1.0 / 9, 1.0, 4.0}) {
    const QreSolution oracle = SolveLogitQre(nf, lambda);
    const QreInstance inst(space, 1.0 / (1.0 + lambda));
    const RealizationProfile gamma = RealizationOf(space, oracle.sigma);
    const Eigen::VectorXd nu = RecoverMultipliers(inst, gamma);
    EXPECT_LE(ResidualGammaSystem(inst, gamma, nu).lpNorm<Eigen::Infinity>(), 1e-6);
  }
}

TEST_F(SeltenQre, RecursiveGeSumsPartialStrategies) {
  for (int trial = 0; trial < 20; ++trial) {
    const RealizationProfile gamma = testing::RandomPlan(space, rng);
    const MixedProfile sigma = MixedOf(space, gamma);
    const double t = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    const double lambda = (1.0 - t) / t;
    const auto u = StrategyPayoffs(nf, sigma);
    for (bool anchored : {false, true}) {
      std::optional<RealizationProfile> anchor;
      if (anchored) anchor = testing::RandomPlan(space, rng);
      const QreInstance inst(space, t, anchor);
      for (int i = 0; i < 3; ++i) {
        std::vector<double> terms;
        const MixedProfile w = anchored ? MixedOf(space, *anchor) : MixedProfile{};
        for (std::size_t s = 0; s < u[i].size(); ++s) {
          terms.push_back(lambda * u[i][s] + (anchored ? std::log(w[i][s]) : 0.0));
        }
        const ScaledLogGe ge = RecursiveGe(inst, i, gamma);
        EXPECT_NEAR(ge.sequence[0] / t, LogSumExp(terms), 1e-8 * std::max(1.0, std::abs(LogSumExp(terms))));
      }
    }
  }
}

TEST_F(SeltenQre, TerminalSequencesHaveNoContinuation) {
  // Sequences without downstream infosets: t ln g_e = (1-t) g + t ln beta0.
  const RealizationProfile gamma = testing::RandomPlan(space, rng);
  const RealizationProfile anchor = testing::RandomPlan(space, rng);
  const QreInstance inst(space, 0.3, anchor);
  for (int i = 0; i < 3; ++i) {
    const ScaledLogGe ge = RecursiveGe(inst, i, gamma);
    const std::vector<double> g = SequencePayoffs(space, i, gamma);
    for (int seq = 1; seq < space.player(i).size(); ++seq) {
      if (!space.player(i).downstream[seq].empty()) continue;
      EXPECT_NEAR(ge.sequence[seq], 0.7 * g[seq] + 0.3 * inst.AnchorLogRatio(i, seq), 1e-14);
    }
  }
}

TEST_F(SeltenQre, BehavioralRatiosAtSolutions) {
  for (double t : {0.9, 0.4}) {
    const QreInstance inst(space, t);
    const FixedTSolution sol = SolveFixedTByContinuation(inst);
    ASSERT_TRUE(sol.converged);
    EXPECT_LE(MaxAbsDiff(PerturbedResponse(inst, sol.gamma), sol.gamma), 1e-8);
    EXPECT_LE((RecoverMultipliers(inst, sol.gamma) - sol.nu).lpNorm<Eigen::Infinity>(), 1e-8);
  }
}

TEST_F(SeltenQre, UniformStrategyAnchorMatchesAnchorFree) {
  // Anchor weights are products of behavioral probabilities along partial
  // strategies; uniform over reduced strategies makes them all equal.
  MixedProfile uniform_sigma;
  for (int i = 0; i < 3; ++i) {
    const std::size_t n = space.strategies(i).size();
    uniform_sigma.strategy.emplace_back(n, 1.0 / static_cast<double>(n));
  }
  const RealizationProfile anchor = RealizationOf(space, uniform_sigma);
  for (double t : {0.8, 0.3}) {
    const FixedTSolution free = SolveFixedTByContinuation(QreInstance(space, t));
    const FixedTSolution anchored = SolveFixedTByContinuation(QreInstance(space, t, anchor));
    ASSERT_TRUE(free.converged && anchored.converged);
    EXPECT_LE(MaxAbsDiff(free.gamma, anchored.gamma), 1e-10);
  }
}

TEST(QreSystem, UniformBehaviorAnchorWithRootInfosets) {
  // Every infoset directly follows the empty sequence, so the anchor terms
  // t ln(1/|A(I)|) are per-infoset constants absorbed by nu.
  const SequenceSpace space = SequenceSpace::Compile(testing::SignallingGame());
  const RealizationProfile uniform = RealizationFromBehavior(space, UniformBehavior(space));
  for (double t : {0.8, 0.3}) {
    const FixedTSolution free = SolveFixedTByContinuation(QreInstance(space, t));
    const QreInstance inst(space, t, uniform);
    const FixedTSolution anchored = SolveFixedTByContinuation(inst);
    ASSERT_TRUE(free.converged && anchored.converged);
    EXPECT_LE(MaxAbsDiff(free.gamma, anchored.gamma), 1e-10);
    Eigen::VectorXd shifted = free.nu;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < space.player(i).num_infosets(); ++j) {
        shifted(space.InfosetSlot(i, j)) += t * std::log(1.0 / space.player(i).num_actions(j));
      }
    }
    EXPECT_LE(ResidualGammaSystem(inst, free.gamma, shifted).lpNorm<Eigen::Infinity>(), 1e-10);
  }
}

TEST(QreSystem, OnePlayerClosedForm) {
  const SequenceSpace space = SequenceSpace::Compile(testing::OnePlayerGame());
  const RealizationProfile anchor{{{1.0, 0.3, 0.7}}};
  for (double t : {0.9, 0.5, 0.1, 0.01}) {
    const double lambda = (1 - t) / t;
    const FixedTSolution sol = SolveFixedTByContinuation(QreInstance(space, t, anchor));
    ASSERT_TRUE(sol.converged);
    const double expected = 0.3 * std::exp(lambda) / (0.3 * std::exp(lambda) + 0.7);
    EXPECT_NEAR(sol.gamma[0][1], expected, 1e-10) << t;
  }
}

TEST(QreSystem, ChanceGame) {
  const GameTree g = testing::SignallingGame();
  const SequenceSpace space = SequenceSpace::Compile(g);
  const NormalForm nf = NormalForm::Build(g);
  for (double t : {0.7, 0.25}) {
    const QreInstance inst(space, t);
    const FixedTSolution sol = SolveFixedTByContinuation(inst);
    ASSERT_TRUE(sol.converged);
    const QreSolution oracle = SolveLogitQre(nf, inst.rationality());
    EXPECT_LE(MaxAbsDiff(sol.gamma, RealizationOf(space, oracle.sigma)), 1e-8);
  }
}

}  // namespace
}  // namespace qrepath
