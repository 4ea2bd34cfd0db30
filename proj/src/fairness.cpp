#include "fairness.hpp"

#include <cmath>

namespace fairfl {

namespace {

void check_groups_present(std::span<const int> s, const char* op) {
  bool g0 = false, g1 = false;
  for (int v : s) (v == 0 ? g0 : g1) = true;
  if (!g0 || !g1)
    fail_validation(std::string(op) + ": sensitive group s=" +
                    (g0 ? "1" : "0") + " is absent, rate undefined");
}

}  // namespace

double ddp_hard(std::span<const int> predictions, std::span<const int> s) {
  if (predictions.size() != s.size())
    fail_validation("ddp_hard: predictions/s length mismatch");
  if (predictions.empty()) fail_validation("ddp_hard: empty input");
  check_groups_present(s, "ddp_hard");
  double pos[2] = {0.0, 0.0};
  double n[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < s.size(); ++i) {
    n[s[i]] += 1.0;
    pos[s[i]] += predictions[i];
  }
  const double r0 = pos[0] / n[0];
  const double r1 = pos[1] / n[1];
  // Sum over y in {0,1} collapses to twice the positive-rate gap.
  return std::abs(r0 - r1) + std::abs((1.0 - r0) - (1.0 - r1));
}

double npr(std::span<const int> predictions, std::span<const int> s,
           int group) {
  if (predictions.size() != s.size())
    fail_validation("npr: predictions/s length mismatch");
  double neg = 0.0, n = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != group) continue;
    n += 1.0;
    if (predictions[i] == 0) neg += 1.0;
  }
  if (n == 0.0)
    fail_validation("npr: group s=" + std::to_string(group) + " is empty");
  return neg / n;
}

PenaltyReport kde_ddp_penalty_and_grad(const ModelParams& params,
                                       const ClientDataset& data, double h) {
  if (!(h > 0.0)) fail_validation("kde penalty: bandwidth must be positive");
  if (!data.has_both_groups())
    fail_validation("kde penalty: both sensitive groups must be present");

  PenaltyReport report;
  report.gradient.assign(params.w.size(), 0.0);

  std::vector<ForwardTrace> traces;
  traces.reserve(data.samples.size());
  for (const auto& smp : data.samples) {
    traces.push_back(forward_traced(params, smp.x));
    const auto& t = traces.back();
    report.rates.rate[smp.s] += normal_cdf(t.logit / h);
    report.rates.count[smp.s] += 1;
  }
  for (int g = 0; g < 2; ++g)
    report.rates.rate[g] /= static_cast<double>(report.rates.count[g]);

  const double diff = report.rates.rate[0] - report.rates.rate[1];
  report.penalty = 2.0 * std::abs(diff);
  const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
  if (sign == 0.0) return report;  // subgradient 0 at exact tie

  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const int g = data.samples[i].s;
    const double group_sign = g == 0 ? sign : -sign;
    const double coeff = 2.0 * group_sign *
                         normal_pdf(traces[i].logit / h) /
                         (h * static_cast<double>(report.rates.count[g]));
    backward_logit(params, traces[i], coeff, report.gradient);
  }
  return report;
}

LossReport fair_loss_and_grad(const ModelParams& params,
                              const ClientDataset& data,
                              const FairnessPenaltyConfig& cfg) {
  cfg.validate();
  LossReport report = bce_loss_and_grad(params, data);
  if (cfg.eta == 0.0) return report;
  const PenaltyReport pen =
      kde_ddp_penalty_and_grad(params, data, cfg.bandwidth_h);
  report.mean_loss += cfg.eta * pen.penalty;
  axpy(cfg.eta, pen.gradient, report.gradient);
  return report;
}

}  // namespace fairfl
