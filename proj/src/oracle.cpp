#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fairfl {

namespace {

constexpr double kProbTol = 1e-12;

// Risk of one sensitive group as a function of its positive rate. Risk is
// linear in each cell's q, so for a fixed rate the optimum is a fractional
// knapsack: fill cells in ascending order of (1 - 2*P(y=1|x,s)).
struct GroupRateSolver {
  struct Cell {
    std::size_t x;
    double weight;  // P(x|s)
    double cost;    // 1 - 2*P(y=1|x,s)
  };
  double p_s = 0.0;
  double base = 0.0;  // sum_x P(x|s) P(y=1|x,s)
  std::vector<Cell> cells;

  static GroupRateSolver build(const DiscreteInstance& inst, int s) {
    GroupRateSolver g;
    g.p_s = inst.p_s(s);
    for (std::size_t x = 0; x < inst.x_size; ++x) {
      const double w = inst.p_xs(x, s) / g.p_s;
      if (w <= kProbTol) continue;
      const double py = inst.p_y1_given_xs(x, s);
      g.base += w * py;
      g.cells.push_back(Cell{x, w, 1.0 - 2.0 * py});
    }
    std::sort(g.cells.begin(), g.cells.end(),
              [](const Cell& a, const Cell& b) {
                if (a.cost != b.cost) return a.cost < b.cost;
                return a.x < b.x;
              });
    return g;
  }

  // Conditional risk P(f != Y | S=s) at the optimal fill for rate r, and
  // optionally the fill itself.
  double conditional_risk(double r, StochasticRule* fill_into = nullptr,
                          int s = 0) const {
    double remaining = r;
    double linear = 0.0;
    for (const auto& cell : cells) {
      const double q = std::min(1.0, std::max(0.0, remaining / cell.weight));
      linear += cell.weight * cell.cost * q;
      remaining -= q * cell.weight;
      if (fill_into) fill_into->at(cell.x, s) = q;
    }
    return base + linear;
  }
};

double disparity_from_rates(double p_s0, double p_s1, double r0, double r1) {
  // TV(Q_{Yhat|S=s}, Q_Yhat) telescopes: the mixture rate sits between the
  // two group rates.
  return 2.0 * p_s0 * p_s1 * std::abs(r0 - r1);
}

}  // namespace

double DiscreteInstance::p_s(int s) const {
  double acc = 0.0;
  for (std::size_t x = 0; x < x_size; ++x) acc += p_xs(x, s);
  return acc;
}

double DiscreteInstance::p_y1_given_xs(std::size_t x, int s) const {
  const double mass = p_xs(x, s);
  return mass > kProbTol ? prob(x, s, 1) / mass : 0.0;
}

double DiscreteInstance::p_y1_given_s(int s) const {
  double acc = 0.0;
  for (std::size_t x = 0; x < x_size; ++x) acc += prob(x, s, 1);
  return acc / p_s(s);
}

bool DiscreteInstance::deterministic_labels() const {
  for (std::size_t x = 0; x < x_size; ++x)
    for (int s = 0; s < 2; ++s) {
      if (p_xs(x, s) <= kProbTol) continue;
      const double py = p_y1_given_xs(x, s);
      if (py > kProbTol && py < 1.0 - kProbTol) return false;
    }
  return true;
}

void DiscreteInstance::validate() const {
  if (x_size == 0 || x_size > 16)
    fail_validation("instance: alphabet size must lie in [1,16]");
  if (p.size() != x_size * 4)
    fail_validation("instance: probability table must have " +
                    std::to_string(x_size * 4) + " entries, got " +
                    std::to_string(p.size()));
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) fail_validation("instance: negative probability entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12)
    fail_validation("instance: probabilities sum to " + std::to_string(total) +
                    ", expected 1");
  for (int s = 0; s < 2; ++s)
    if (p_s(s) <= kProbTol)
      fail_validation("instance: P(S=" + std::to_string(s) +
                      ") must be positive");
}

BayesResult bayes_rule(const DiscreteInstance& inst) {
  inst.validate();
  BayesResult result;
  result.rule.x_size = inst.x_size;
  result.rule.q.assign(inst.x_size * 2, 0.0);
  for (std::size_t x = 0; x < inst.x_size; ++x)
    for (int s = 0; s < 2; ++s) {
      if (inst.p_xs(x, s) <= kProbTol) {
        result.flagged_cells.push_back(x * 2 + static_cast<std::size_t>(s));
        continue;
      }
      // Tie at exactly 0.5 resolves to 0.
      result.rule.at(x, s) = inst.p_y1_given_xs(x, s) > 0.5 ? 1.0 : 0.0;
    }
  return result;
}

double rule_risk(const DiscreteInstance& inst, const StochasticRule& rule) {
  if (rule.x_size != inst.x_size)
    fail_validation("rule_risk: rule/instance alphabet mismatch");
  double risk = 0.0;
  for (std::size_t x = 0; x < inst.x_size; ++x)
    for (int s = 0; s < 2; ++s) {
      const double q = rule.at(x, s);
      risk += inst.prob(x, s, 0) * q + inst.prob(x, s, 1) * (1.0 - q);
    }
  return risk;
}

double rule_disparity(const DiscreteInstance& inst,
                      const StochasticRule& rule) {
  if (rule.x_size != inst.x_size)
    fail_validation("rule_disparity: rule/instance alphabet mismatch");
  double rate[2];
  for (int s = 0; s < 2; ++s) {
    double acc = 0.0;
    for (std::size_t x = 0; x < inst.x_size; ++x)
      acc += inst.p_xs(x, s) * rule.at(x, s);
    rate[s] = acc / inst.p_s(s);
  }
  const double mix = inst.p_s(0) * rate[0] + inst.p_s(1) * rate[1];
  return inst.p_s(0) * std::abs(rate[0] - mix) +
         inst.p_s(1) * std::abs(rate[1] - mix);
}

FairOptimum fair_optimum_grid(const DiscreteInstance& inst, double epsilon,
                              int grid_n) {
  inst.validate();
  if (epsilon < 0.0) fail_validation("fair_optimum_grid: epsilon must be >= 0");
  if (grid_n < 11) fail_validation("fair_optimum_grid: grid_n must be >= 11");

  const GroupRateSolver solver[2] = {GroupRateSolver::build(inst, 0),
                                     GroupRateSolver::build(inst, 1)};
  const double p0 = solver[0].p_s, p1 = solver[1].p_s;

  auto total_risk = [&](double r0, double r1) {
    return p0 * solver[0].conditional_risk(r0) +
           p1 * solver[1].conditional_risk(r1);
  };
  auto feasible = [&](double r0, double r1) {
    return disparity_from_rates(p0, p1, r0, r1) <= epsilon + 1e-12;
  };

  const double step0 = 1.0 / static_cast<double>(grid_n - 1);
  double best_r0 = 0.0, best_r1 = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_n; ++i) {
    const double r0 = static_cast<double>(i) * step0;
    for (int j = 0; j < grid_n; ++j) {
      const double r1 = static_cast<double>(j) * step0;
      if (!feasible(r0, r1)) continue;
      const double risk = total_risk(r0, r1);
      if (risk < best) {
        best = risk;
        best_r0 = r0;
        best_r1 = r1;
      }
    }
  }

  // Local refinement: pattern search over the two rates with shrinking step.
  double step = step0;
  while (step > 1e-12) {
    bool improved = false;
    static constexpr double moves[8][2] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1},
                                           {1, 1},  {-1, -1}, {1, -1}, {-1, 1}};
    for (const auto& mv : moves) {
      const double r0 = std::clamp(best_r0 + mv[0] * step, 0.0, 1.0);
      const double r1 = std::clamp(best_r1 + mv[1] * step, 0.0, 1.0);
      if (!feasible(r0, r1)) continue;
      const double risk = total_risk(r0, r1);
      if (risk < best - 1e-15) {
        best = risk;
        best_r0 = r0;
        best_r1 = r1;
        improved = true;
      }
    }
    if (!improved) step *= 0.5;
  }

  FairOptimum opt;
  opt.epsilon = epsilon;
  opt.rule.x_size = inst.x_size;
  opt.rule.q.assign(inst.x_size * 2, 0.0);
  solver[0].conditional_risk(best_r0, &opt.rule, 0);
  solver[1].conditional_risk(best_r1, &opt.rule, 1);
  opt.risk = rule_risk(inst, opt.rule);
  opt.achieved_disparity = rule_disparity(inst, opt.rule);
  return opt;
}

double fair_optimal_risk_closed_form(const DiscreteInstance& inst) {
  inst.validate();
  if (!inst.deterministic_labels())
    fail_validation(
        "closed form requires deterministic labels Y = g(X,S); instance has "
        "a nondeterministic cell");
  double bayes_risk = 0.0;
  for (std::size_t x = 0; x < inst.x_size; ++x)
    for (int s = 0; s < 2; ++s) {
      const double mass = inst.p_xs(x, s);
      if (mass <= kProbTol) continue;
      const double py = inst.p_y1_given_xs(x, s);
      bayes_risk += mass * std::min(py, 1.0 - py);
    }
  const double p_min = std::min(inst.p_s(0), inst.p_s(1));
  const double tv = std::abs(inst.p_y1_given_s(0) - inst.p_y1_given_s(1));
  return bayes_risk + p_min * tv;
}

GapBound flipped_majority_gap_bound(std::span<const DiscreteInstance> instances,
                         int grid_n, double dp_tolerance) {
  if (instances.size() < 2)
    fail_validation("flipped_majority_gap_bound: need at least 2 clients");
  if (grid_n < 2) fail_validation("flipped_majority_gap_bound: grid_n must be >= 2");
  const std::size_t nx = instances[0].x_size;
  for (const auto& inst : instances) {
    inst.validate();
    if (inst.x_size != nx)
      fail_validation("flipped_majority_gap_bound: clients must share the X alphabet");
  }
  // Shared conditional P(y|x,s) across clients, wherever both define it.
  for (std::size_t x = 0; x < nx; ++x)
    for (int s = 0; s < 2; ++s) {
      double ref = -1.0;
      for (const auto& inst : instances) {
        if (inst.p_xs(x, s) <= kProbTol) continue;
        const double py = inst.p_y1_given_xs(x, s);
        if (ref < 0.0)
          ref = py;
        else if (std::abs(py - ref) > 1e-9)
          fail_validation("flipped_majority_gap_bound: clients do not share P(y|x,s)");
      }
    }
  // The bound also presumes heterogeneity only in the group proportions:
  // with per-client P(x|s) a single rule can realize every client's own
  // fair optimum at once and the right-hand side stops being a lower bound.
  for (std::size_t x = 0; x < nx; ++x)
    for (int s = 0; s < 2; ++s) {
      double ref = -1.0;
      for (const auto& inst : instances) {
        if (inst.p_s(s) <= kProbTol) continue;
        const double px = inst.p_xs(x, s) / inst.p_s(s);
        if (ref < 0.0)
          ref = px;
        else if (std::abs(px - ref) > 1e-9)
          fail_validation("flipped_majority_gap_bound: clients do not share P(x|s)");
      }
    }

  const double m = static_cast<double>(instances.size());
  double pooled_s1 = 0.0;
  for (const auto& inst : instances) pooled_s1 += inst.p_s(1) / m;
  if (std::abs(pooled_s1 - 0.5) <= 1e-12)
    fail_validation(
        "flipped_majority_gap_bound: pooled sensitive attribute is tied; the bound "
        "presumes a strict majority");
  const int s_max = pooled_s1 > 0.5 ? 1 : 0;

  GapBound bound;
  for (const auto& inst : instances) {
    const int client_max = inst.p_s(1) > 0.5 ? 1 : 0;
    if (client_max == s_max) continue;  // aligned client contributes zero
    const double factor = 2.0 * inst.p_s(client_max) - 1.0;
    // TV between the two label conditionals; for binary labels this is the
    // positive-rate difference. For deterministic labels and proportion-only
    // heterogeneity the bound is tight: the best shared rule loses exactly
    // factor * tv on every client whose majority group is flipped.
    const double tv =
        std::abs(inst.p_y1_given_s(0) - inst.p_y1_given_s(1));
    bound.rhs += factor * tv;
  }

  std::vector<double> fair_opt(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i)
    fair_opt[i] = instances[i].deterministic_labels()
                      ? fair_optimal_risk_closed_form(instances[i])
                      : fair_optimum_grid(instances[i], 0.0, std::max(grid_n, 11))
                            .risk;

  const std::size_t n_cells = nx * 2;
  double combos = 1.0;
  for (std::size_t c = 0; c < n_cells; ++c)
    combos *= static_cast<double>(grid_n);
  if (combos > 2e8)
    fail_validation("flipped_majority_gap_bound: grid of " + std::to_string(combos) +
                    " rules exceeds the complexity guard");

  StochasticRule rule;
  rule.x_size = nx;
  rule.q.assign(n_cells, 0.0);
  std::vector<int> odo(n_cells, 0);
  const double step = 1.0 / static_cast<double>(grid_n - 1);
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    for (std::size_t c = 0; c < n_cells; ++c)
      rule.q[c] = static_cast<double>(odo[c]) * step;
    bool dp_ok = true;
    for (const auto& inst : instances)
      if (rule_disparity(inst, rule) > dp_tolerance) {
        dp_ok = false;
        break;
      }
    if (dp_ok) {
      double excess = 0.0;
      for (std::size_t i = 0; i < instances.size(); ++i)
        excess += rule_risk(instances[i], rule) - fair_opt[i];
      best = std::min(best, excess);
    }
    std::size_t c = 0;
    while (c < n_cells && ++odo[c] == grid_n) odo[c++] = 0;
    if (c == n_cells) break;
  }
  bound.lhs_best_global = best;
  return bound;
}

DiscreteInstance instance_from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail_validation(std::string("instance JSON parse error: ") + e.what());
  }
  DiscreteInstance inst;
  try {
    inst.x_size = doc.at("x_size").get<std::size_t>();
    inst.p = doc.at("p").get<Vec64>();
  } catch (const nlohmann::json::exception& e) {
    fail_validation(std::string("instance JSON schema error: ") + e.what());
  }
  inst.validate();
  return inst;
}

DiscreteInstance instance_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_validation("cannot open instance file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return instance_from_json(buf.str());
}

std::string fair_optimum_report_json(const DiscreteInstance& inst,
                                     const FairOptimum& opt) {
  nlohmann::json doc;
  doc["epsilon"] = opt.epsilon;
  doc["risk"] = opt.risk;
  doc["achieved_disparity"] = opt.achieved_disparity;
  doc["rule_q"] = opt.rule.q;
  const auto bayes = bayes_rule(inst);
  doc["bayes_risk"] = rule_risk(inst, bayes.rule);
  if (inst.deterministic_labels()) {
    doc["closed_form_fair_risk"] = fair_optimal_risk_closed_form(inst);
    doc["closed_form_matches"] =
        std::abs(doc["closed_form_fair_risk"].get<double>() - opt.risk) < 2e-2;
  }
  return doc.dump(2);
}

}  // namespace fairfl
