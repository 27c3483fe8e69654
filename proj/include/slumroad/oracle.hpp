#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "slumroad/baselines.hpp"
#include "slumroad/errors.hpp"
#include "slumroad/slum_state.hpp"

namespace slumroad {

inline constexpr std::uint64_t kOracleLimit = 10'000'000;

/// binomial(n, k), saturating at `cap + 1`.
inline std::uint64_t binomial_capped(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // c * (n-k+i) / i is exact; check the size before forming the product.
    if (static_cast<long double>(c) * static_cast<long double>(n - k + i) / static_cast<long double>(i) > cap)
      return cap + 1;
    c = c * (n - k + i) / i;
  }
  return c;
}

struct OracleResult {
  std::optional<int> min_nr;                 // fewest segments reaching universal connectivity
  std::vector<std::vector<EdgeId>> nr_plans; // every subset achieving min_nr
  double min_ad = kInf;                      // over feasible subsets of exactly `budget` segments
  std::vector<std::vector<EdgeId>> ad_plans;
  std::uint64_t subsets = 0;                 // subsets visited (all sizes up to the budget)
  std::uint64_t feasible = 0;                // of size `budget`
};

/// Exhaustive search over candidate subsets of size <= budget whose union
/// with the exterior is connected.
inline OracleResult brute_force_oracle(const std::shared_ptr<const SlumContext>& ctx, int budget) {
  const auto& cands = ctx->candidates;
  if (budget < 0 || static_cast<std::size_t>(budget) > cands.size())
    throw ConfigError("oracle budget must lie in [0, candidates]");
  std::uint64_t total = 0;
  for (int k = 0; k <= budget; ++k) {
    total += binomial_capped(cands.size(), static_cast<std::uint64_t>(k), kOracleLimit);
    if (total > kOracleLimit) throw TooLargeError("more than 1e7 subsets to enumerate");
  }
  OracleResult res;
  std::vector<EdgeId> chosen;
  const double tol = 1e-12;
  auto visit = [&](auto& self, const SlumGraph& s, std::size_t next) -> void {
    ++res.subsets;
    const int k = static_cast<int>(chosen.size());
    const bool connected = detail::roads_connected(s);
    if (connected && s.universally_connected() && (!res.min_nr || k <= *res.min_nr)) {
      if (!res.min_nr || k < *res.min_nr) res.nr_plans.clear();
      res.min_nr = k;
      res.nr_plans.push_back(chosen);
    }
    if (k == budget) {
      if (!connected) return;
      ++res.feasible;
      const double ad = s.average_face_distance();
      if (res.ad_plans.empty() || ad < res.min_ad - tol * std::max(1.0, res.min_ad)) {
        res.min_ad = ad;
        res.ad_plans = {chosen};
      } else if (ad <= res.min_ad + tol * std::max(1.0, res.min_ad)) {
        res.ad_plans.push_back(chosen);
      }
      return;
    }
    for (std::size_t i = next; i < cands.size(); ++i) {
      SlumGraph t = s;
      t.set_road(cands[i]);
      chosen.push_back(cands[i]);
      self(self, t, i + 1);
      chosen.pop_back();
    }
  };
  visit(visit, SlumGraph(ctx), 0);
  return res;
}

inline nlohmann::json to_json(const OracleResult& r) {
  return {{"min_NR", r.min_nr ? nlohmann::json(*r.min_nr) : nlohmann::json(nullptr)},
          {"min_NR_plans", r.nr_plans},
          {"min_AD", r.min_ad < kInf ? nlohmann::json(r.min_ad) : nlohmann::json("INF")},
          {"min_AD_plans", r.ad_plans},
          {"subsets", r.subsets},
          {"feasible_at_budget", r.feasible}};
}

}  // namespace slumroad
