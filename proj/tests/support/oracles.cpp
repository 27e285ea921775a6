#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace uniboost::testing {

ReplayInstance random_instance(std::mt19937_64& rng, std::size_t max_candidates,
                               std::size_t max_plans) {
  std::uniform_int_distribution<std::size_t> n_cand(1, max_candidates);
  std::uniform_int_distribution<std::size_t> n_plan(1, max_plans);
  std::uniform_int_distribution<int> quant(0, 20);
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<std::string> tags = {"promo", "new", "local"};
  const std::vector<ContentType> types = {ContentType::organic(), ContentType::ad(),
                                          ContentType::cold_start()};

  ReplayInstance inst;
  inst.params.mu_score = 0.5;
  inst.params.mu_anchor = 0.3;
  const std::size_t n = n_cand(rng);
  inst.request.request_id = "q";
  inst.request.k = std::uniform_int_distribution<std::size_t>(1, n)(rng);
  for (std::size_t i = 0; i < n; ++i) {
    Candidate c;
    c.id = std::string(1, static_cast<char>('a' + i));
    c.content_type = types[static_cast<std::size_t>(kind(rng))];
    c.raw_score = 0.05 * quant(rng);
    for (const auto& t : tags) {
      if (unit(rng) < 0.3) c.tags.insert(t);
    }
    inst.request.candidates.push_back(std::move(c));
  }
  std::vector<Plan> plans;
  const std::size_t m = n_plan(rng);
  for (std::size_t j = 0; j < m; ++j) {
    Plan p;
    p.plan_id = "p" + std::to_string(j);
    if (unit(rng) < 0.5) {
      p.selector.content_type = types[static_cast<std::size_t>(kind(rng))];
    } else {
      p.selector.tags = {tags[static_cast<std::size_t>(kind(rng))]};
    }
    if (unit(rng) < 0.3) {
      p.mode = PlanMode::kPidDelivered;
      p.target_share = 0.2;
      p.bias = 0.05 * quant(rng);
    } else {
      p.weight = 0.1 * quant(rng);
      p.bias = unit(rng) < 0.5 ? 0.0 : 0.01 * quant(rng);
    }
    p.enabled = unit(rng) < 0.9;
    plans.push_back(std::move(p));
  }
  inst.registry = PlanRegistry(std::move(plans));
  return inst;
}

ReplayResult reblend_oracle(std::span<const ReplayInstance> instances,
                            const std::string& plan_id) {
  ReplayResult result;
  long double displaced = 0.0L;
  for (const auto& inst : instances) {
    const BlendDecision actual = blend(inst.request, inst.registry, inst.params);
    const PlanRegistry without = inst.registry.find(plan_id)
                                     ? inst.registry.without_plan(plan_id)
                                     : inst.registry;
    const BlendDecision cf = blend(inst.request, without, inst.params);

    std::set<std::string> actual_top, cf_top;
    for (std::size_t i = 0; i < actual.exposed_k; ++i) {
      actual_top.insert(actual.ranked[i].candidate_id);
    }
    for (std::size_t i = 0; i < cf.exposed_k; ++i) cf_top.insert(cf.ranked[i].candidate_id);

    for (const auto& d : actual.ranked) {
      const bool member = d.plan_boosts.contains(plan_id);
      const bool in_actual = actual_top.contains(d.candidate_id);
      const bool in_cf = cf_top.contains(d.candidate_id);
      if (member) result.vv_lift += static_cast<int>(in_actual) - static_cast<int>(in_cf);
      if (in_cf && !in_actual) displaced += d.aligned;
      if (in_actual && !in_cf && member) displaced -= d.aligned;
    }
  }
  result.cost = std::max(0.0, static_cast<double>(displaced));
  return result;
}

double psi_oracle(std::span<const std::int64_t> reference,
                  std::span<const std::int64_t> current) {
  long double tp = 0.0L, tq = 0.0L;
  for (auto c : reference) tp += c;
  for (auto c : current) tq += c;
  long double psi = 0.0L;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const long double p = std::max(reference[i] / tp, 1e-6L);
    const long double q = std::max(current[i] / tq, 1e-6L);
    psi += (q - p) * std::log(q / p);
  }
  return static_cast<double>(psi);
}

long double mean_ld(std::span<const double> xs) {
  long double s = 0.0L;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0L : s / xs.size();
}

}  // namespace uniboost::testing
