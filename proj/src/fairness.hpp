#pragma once

#include <span>

#include "model.hpp"

namespace fairfl {

struct FairnessPenaltyConfig {
  double eta = 0.0;        // regularization weight
  double bandwidth_h = 0.1;  // kernel smoothing scale on the logit axis

  void validate() const {
    if (!(eta >= 0.0)) fail_validation("fairness: eta must be >= 0");
    if (!(bandwidth_h > 0.0))
      fail_validation("fairness: bandwidth_h must be positive");
  }
};

struct GroupRates {
  double rate[2] = {0.0, 0.0};  // smoothed positive rate per s-group
  std::size_t count[2] = {0, 0};
};

// DDP here is the sum over both labels of absolute rate differences, so the
// range is [0,2]. Many papers report half this value; see ddp gap in metrics.
double ddp_hard(std::span<const int> predictions, std::span<const int> s);

// Negative prediction rate P(yhat=0 | S=group).
double npr(std::span<const int> predictions, std::span<const int> s, int group);

struct PenaltyReport {
  double penalty = 0.0;
  Vec64 gradient;
  GroupRates rates;
};

// Kernel-smoothed DDP: r(s) = mean over group s of Phi(logit/h); penalty is
// 2*|r(0)-r(1)| with the analytic chain-rule gradient. Subgradient 0 at an
// exact tie.
PenaltyReport kde_ddp_penalty_and_grad(const ModelParams& params,
                                       const ClientDataset& data, double h);

// BCE plus eta times the smoothed penalty, with combined gradient.
LossReport fair_loss_and_grad(const ModelParams& params,
                              const ClientDataset& data,
                              const FairnessPenaltyConfig& cfg);

}  // namespace fairfl
