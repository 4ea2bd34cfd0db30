#pragma once

#include <span>
#include <string>
#include <vector>

#include "numerics.hpp"

namespace fairfl {

// Finite joint table P(X,S,Y) with binary S and Y; index (x,s,y).
struct DiscreteInstance {
  std::size_t x_size = 0;
  Vec64 p;  // flat, ((x*2)+s)*2+y

  double prob(std::size_t x, int s, int y) const {
    return p[(x * 2 + static_cast<std::size_t>(s)) * 2 +
             static_cast<std::size_t>(y)];
  }
  double p_xs(std::size_t x, int s) const {
    return prob(x, s, 0) + prob(x, s, 1);
  }
  double p_s(int s) const;
  // P(Y=1|X=x,S=s); 0 on zero-probability cells.
  double p_y1_given_xs(std::size_t x, int s) const;
  double p_y1_given_s(int s) const;
  bool deterministic_labels() const;
  void validate() const;
};

// Decision kernel q(yhat=1 | x, s) per (x,s) cell.
struct StochasticRule {
  std::size_t x_size = 0;
  Vec64 q;  // flat, x*2+s

  double at(std::size_t x, int s) const {
    return q[x * 2 + static_cast<std::size_t>(s)];
  }
  double& at(std::size_t x, int s) {
    return q[x * 2 + static_cast<std::size_t>(s)];
  }
};

struct BayesResult {
  StochasticRule rule;
  std::vector<std::size_t> flagged_cells;  // zero-probability (x,s) cells
};
BayesResult bayes_rule(const DiscreteInstance& inst);

double rule_risk(const DiscreteInstance& inst, const StochasticRule& rule);
// E_s[ TV(Q_{Yhat|S=s}, Q_Yhat) ]; binary TV is the positive-mass gap.
double rule_disparity(const DiscreteInstance& inst, const StochasticRule& rule);

struct FairOptimum {
  StochasticRule rule;
  double risk = 0.0;
  double achieved_disparity = 0.0;
  double epsilon = 0.0;
};

// Minimum-risk rule subject to disparity <= epsilon. Searches a uniform grid
// over the per-group positive rates (risk is separable given the rates, so
// each grid point is solved exactly), then refines by coordinate descent.
FairOptimum fair_optimum_grid(const DiscreteInstance& inst, double epsilon,
                              int grid_n);

// Closed form for deterministic-label instances: Bayes risk plus
// P(s_min) * TV(P_{Y|S=0}, P_{Y|S=1}).
double fair_optimal_risk_closed_form(const DiscreteInstance& inst);

struct GapBound {
  double rhs = 0.0;
  double lhs_best_global = 0.0;
};

// Numerical check of the multi-client excess-risk lower bound: the best
// per-client-DP-feasible global rule (fine grid over decision cells) versus
// the closed-form right-hand side.
GapBound flipped_majority_gap_bound(std::span<const DiscreteInstance> instances,
                         int grid_n, double dp_tolerance);

DiscreteInstance instance_from_json(const std::string& json_text);
DiscreteInstance instance_from_json_file(const std::string& path);
std::string fair_optimum_report_json(const DiscreteInstance& inst,
                                     const FairOptimum& opt);

}  // namespace fairfl
