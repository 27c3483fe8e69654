#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "test_support.hpp"

using namespace slumroad;
namespace ts = testing_support;

namespace {

std::vector<EdgeId> allowed(const Mask& m) {
  std::vector<EdgeId> out;
  for (std::size_t e = 0; e < m.size(); ++e)
    if (m[e]) out.push_back(static_cast<EdgeId>(e));
  return out;
}

std::shared_ptr<const SlumContext> courtyard() {
  return load_context(ts::walled_courtyard(), {false, 0.02, false}, "courtyard");
}

}  // namespace

TEST(Env, DefaultBudgetIsHalfTheCandidates) {
  Environment env(ts::grid(3, 3), {});
  EXPECT_EQ(env.budget(), 6.0);
  EXPECT_EQ(env.stage(), Stage::kConnect);
  EXPECT_FALSE(env.done());
}

TEST(Env, StageOneMaskOnGridIsTheEightSpokes) {
  const auto ctx = ts::grid(3, 3);
  Environment env(ctx, {});
  const auto a = allowed(env.action_mask());
  ASSERT_EQ(a.size(), 8u);
  for (EdgeId e : a) {
    const Edge& ed = ctx->graph.edges[e];
    EXPECT_NE(ctx->exterior_node[ed.a], ctx->exterior_node[ed.b]) << "edge " << e;
  }
}

TEST(Env, SpokeRewardAndStageSwitch) {
  const auto ctx = ts::grid(3, 3);
  Environment env(ctx, {});
  const EdgeId spoke = allowed(env.action_mask()).front();
  const StepOutcome out = env.step(spoke);
  // Far endpoint touches four places, only the centre one unconnected.
  EXPECT_EQ(out.far_unconnected, 1);
  EXPECT_EQ(out.newly_connected, 1);
  EXPECT_NEAR(out.reward, 1.0 - 0.5 / 1.2, 1e-12);
  EXPECT_EQ(out.acted_in, Stage::kConnect);
  EXPECT_EQ(out.stage, Stage::kShorten);
  EXPECT_EQ(out.distance_term, 0.0);
  EXPECT_EQ(env.state().connectivity_step(), 1);
  // Stage II: every non-road edge touching the network.
  const Mask& m = env.action_mask();
  for (EdgeId e = 0; e < static_cast<EdgeId>(m.size()); ++e) {
    const Edge& ed = ctx->graph.edges[e];
    const bool touching = !env.state().road(e) && (env.state().on_road(ed.a) || env.state().on_road(ed.b));
    EXPECT_EQ(m[e] != 0, touching);
  }
}

TEST(Env, RewardWeightsFollowConfig) {
  EnvConfig cfg;
  cfg.alpha1 = 2.0;
  cfg.alpha2 = -0.25;
  const auto ctx = ts::grid(3, 3);
  Environment env(ctx, cfg);
  const EdgeId spoke = allowed(env.action_mask()).front();
  EXPECT_NEAR(env.step(spoke).reward, 2.0 - 0.25 / 1.2, 1e-12);
  const EdgeId next = allowed(env.action_mask()).front();
  const double d0 = env.current_d();
  const StepOutcome o = env.step(next);
  EXPECT_NEAR(o.distance_term, 2.0 * (d0 - o.d_value), 1e-12);
  EXPECT_NEAR(o.reward, o.distance_term - 0.25 * ctx->graph.edges[next].cost, 1e-12);
}

TEST(Env, SegmentBudgetEndsEpisode) {
  Environment env(ts::grid(3, 3), {});
  std::mt19937_64 rng(4);
  ts::random_walk(env, 100, rng);
  EXPECT_TRUE(env.done());
  EXPECT_EQ(env.steps(), 6);
  EXPECT_THROW(env.step(0), InvalidAction);
}

TEST(Env, RejectsMaskedAction) {
  const auto ctx = ts::grid(3, 3);
  Environment env(ctx, {});
  const Mask& m = env.action_mask();
  EdgeId blocked = -1;
  for (EdgeId e = 0; e < static_cast<EdgeId>(m.size()); ++e)
    if (!m[e]) blocked = e;
  EXPECT_THROW(env.step(blocked), InvalidAction);
  EXPECT_THROW(env.step(-3), InvalidAction);
  EXPECT_EQ(env.steps(), 0);
}

TEST(Env, ConfigValidation) {
  const auto ctx = ts::grid(3, 3);
  EnvConfig c;
  c.alpha1 = 0.0;
  EXPECT_THROW(Environment(ctx, c), ConfigError);
  c = {};
  c.alpha2 = 0.1;
  EXPECT_THROW(Environment(ctx, c), ConfigError);
  c = {};
  c.budget = 2.5;
  EXPECT_THROW(Environment(ctx, c), ConfigError);
  c = {};
  c.budget = 13;
  EXPECT_THROW(Environment(ctx, c), ConfigError);
  c = {};
  c.budget = 0;
  EXPECT_THROW(Environment(ctx, c), ConfigError);
  c = {};
  c.budget_mode = BudgetMode::kConstructionCost;
  c.budget = ctx->graph.total_candidate_cost() * 1.01;
  EXPECT_THROW(Environment(ctx, c), ConfigError);
}

TEST(Env, TelescopingOverRandomEpisodes) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    EnvConfig cfg;
    cfg.alpha1 = 0.5 + 0.1 * static_cast<double>(seed % 5);
    cfg.budget_fraction = 0.75;
    Environment env(ts::grid(3, 4, 0.3, seed), cfg);
    std::mt19937_64 rng(seed);
    double d_start = 0.0, sum = 0.0;
    bool in_two = env.stage() == Stage::kShorten;
    if (in_two) d_start = env.current_d();
    while (!env.done()) {
      const auto a = allowed(env.action_mask());
      const double before = env.current_d();
      const StepOutcome o = env.step(a[std::uniform_int_distribution<std::size_t>(0, a.size() - 1)(rng)]);
      if (o.acted_in == Stage::kShorten) {
        if (!in_two) {
          in_two = true;
          d_start = before;
        }
        sum += o.distance_term;
      }
    }
    if (in_two) {
      EXPECT_NEAR(sum, cfg.alpha1 * (d_start - env.current_d()), 1e-9) << "seed " << seed;
    }
  }
}

TEST(Env, MonotoneUnderRandomPlay) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    EnvConfig cfg;
    cfg.masking = seed % 2 ? Masking::kStaged : Masking::kTrivial;
    cfg.budget_fraction = 1.0;
    const auto ctx = ts::grid(3, 3, 0.3, seed);
    Environment env(ctx, cfg);
    std::mt19937_64 rng(seed);
    const auto nf = static_cast<FaceId>(ctx->graph.faces.size());
    while (!env.done()) {
      const SlumGraph before = env.state();
      const auto a = allowed(env.action_mask());
      env.step(a[std::uniform_int_distribution<std::size_t>(0, a.size() - 1)(rng)]);
      const SlumGraph& after = env.state();
      ASSERT_GE(after.connected_count(), before.connected_count());
      for (FaceId u = 0; u < nf; ++u)
        for (FaceId v = 0; v < nf; ++v) ASSERT_LE(after.face_distance(u, v), before.face_distance(u, v));
    }
  }
}

TEST(Env, StagedMaskKeepsRoadsInOnePiece) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    EnvConfig cfg;
    cfg.budget_fraction = 1.0;
    Environment env(ts::grid(4, 3, 0.2, seed), cfg);
    std::mt19937_64 rng(seed);
    while (!env.done()) {
      const auto a = allowed(env.action_mask());
      env.step(a[std::uniform_int_distribution<std::size_t>(0, a.size() - 1)(rng)]);
      ASSERT_TRUE(detail::roads_connected(env.state()));
    }
  }
}

TEST(Env, TrivialMaskAllowsEveryNonRoadEdge) {
  EnvConfig cfg;
  cfg.masking = Masking::kTrivial;
  const auto ctx = ts::grid(3, 3);
  Environment env(ctx, cfg);
  EXPECT_EQ(allowed(env.action_mask()).size(), 12u);
}

TEST(Env, DeadlockRaisesOrRelaxes) {
  const auto ctx = courtyard();
  ASSERT_EQ(ctx->graph.num_faces(), 5u);
  EnvConfig strict;
  strict.relax_deadlock = false;
  // Detected as soon as the episode starts.
  EXPECT_THROW(Environment(ctx, strict), DeadlockError);

  Environment relaxed(ctx, {});
  const auto a = allowed(relaxed.action_mask());
  EXPECT_EQ(a.size(), 4u);  // the outer halves of the four spokes
  for (EdgeId e : a) EXPECT_EQ(relaxed.far_endpoint_count(e), 0);
  relaxed.step(a.front());
  // The spoke's inner half now reaches the courtyard.
  const auto b = allowed(relaxed.action_mask());
  ASSERT_FALSE(b.empty());
  const StepOutcome o = relaxed.step(b.front());
  EXPECT_EQ(o.far_unconnected, 1);
  EXPECT_TRUE(relaxed.state().universally_connected());
  EXPECT_EQ(relaxed.state().connectivity_step(), 2);
}

TEST(Env, CostBudgetNeverExceeded) {
  const auto ctx = ts::grid(4, 4, 0.3, 2);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    EnvConfig cfg;
    cfg.budget_mode = BudgetMode::kConstructionCost;
    cfg.budget_fraction = 0.3;
    Environment env(ctx, cfg);
    std::mt19937_64 rng(seed);
    ts::random_walk(env, 1000, rng);
    EXPECT_TRUE(env.done());
    EXPECT_LE(env.spent(), env.budget() * (1.0 + 1e-12));
    // Terminated only because nothing affordable remains.
    const Mask& m = env.action_mask();
    EXPECT_EQ(std::accumulate(m.begin(), m.end(), 0), 0);
  }
}

TEST(Env, LiteralNormalisationScalesD) {
  const auto ctx = ts::grid(3, 3);
  EnvConfig lit;
  lit.d_normalization = DNormalization::kSumTimesPairs;
  Environment a(ctx, {}), b(ctx, lit);
  const double pairs = 36.0;
  EXPECT_NEAR(b.current_d(), a.current_d() * pairs * pairs, 1e-9);
}

TEST(Env, ResetRestoresInitialState) {
  Environment env(ts::grid(3, 3), {});
  const double d0 = env.current_d();
  const Mask m0 = env.action_mask();
  std::mt19937_64 rng(1);
  ts::random_walk(env, 4, rng);
  env.reset();
  EXPECT_EQ(env.steps(), 0);
  EXPECT_EQ(env.current_d(), d0);
  EXPECT_EQ(env.action_mask(), m0);
  EXPECT_EQ(env.stage(), Stage::kConnect);
  EXPECT_TRUE(env.state().planned().empty());
}

TEST(Env, ConnectedAtResetStartsInStageTwo) {
  const auto ctx = load_context(ts::house(), {false, 0.02, false}, "house");
  Environment env(ctx, {});
  EXPECT_EQ(env.stage(), Stage::kShorten);
  EXPECT_EQ(env.budget(), 1.0);
  const auto a = allowed(env.action_mask());
  ASSERT_EQ(a.size(), 1u);
  env.step(a[0]);
  EXPECT_TRUE(env.done());
}

TEST(Env, RunEpisodeReportIsConsistent) {
  const auto ctx = ts::grid(3, 3, 0.2, 5);
  Environment env(ctx, {});
  std::mt19937_64 rng(3);
  const PlanReport r = run_episode(
      env,
      [&](const Environment& e) {
        const auto a = allowed(e.action_mask());
        return a[std::uniform_int_distribution<std::size_t>(0, a.size() - 1)(rng)];
      },
      "test");
  EXPECT_TRUE(report_violations(r).empty());
  EXPECT_EQ(r.steps.size(), 6u);
  double total = 0.0;
  for (const PlanStep& s : r.steps) total += s.reward;
  EXPECT_NEAR(r.total_reward, total, 1e-12);
  EXPECT_EQ(r.faces, 9);
}
