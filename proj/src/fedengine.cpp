#include "fedengine.hpp"

#include <algorithm>
#include <cmath>

namespace fairfl {

namespace {

constexpr double kDivergenceNorm = 1e6;
constexpr std::uint64_t kInitStream = 0x696E6974;         // model init
constexpr std::uint64_t kParticipationStream = 0x70617274;

void check_finite(const ModelParams& w, int round, int client_id) {
  double n = norm2(w.w);
  if (!std::isfinite(n) || n > kDivergenceNorm)
    fail_runtime("divergence detected at round " + std::to_string(round) +
                 ", client " + std::to_string(client_id) +
                 " (weight norm " + std::to_string(n) + ")");
}

std::vector<std::size_t> participating_clients(std::size_t m,
                                               const FairFLConfig& cfg,
                                               int round) {
  std::vector<std::size_t> ids(m);
  for (std::size_t i = 0; i < m; ++i) ids[i] = i;
  if (cfg.participation >= 1.0) return ids;
  const std::size_t k = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::ceil(cfg.participation * static_cast<double>(m))));
  Rng rng(cfg.seed, kParticipationStream + static_cast<std::uint64_t>(round));
  rng.shuffle(ids);
  ids.resize(k);
  std::sort(ids.begin(), ids.end());
  return ids;
}

// Equal-weight average in ascending client_id order, so the reduction order
// (and therefore the result, bit for bit) does not depend on how the caller
// happened to order the client list.
ModelParams average_models(const ModelParams& like,
                           std::vector<std::pair<int, Vec64>>& updates) {
  std::sort(updates.begin(), updates.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  ModelParams avg = like;
  avg.w.assign(like.w.size(), 0.0);
  const double inv_m = 1.0 / static_cast<double>(updates.size());
  for (const auto& [id, u] : updates) axpy(inv_m, u, avg.w);
  return avg;
}

ClientRoundStat client_stat(int client_id, const ModelParams& updated,
                            const ModelParams& global, double loss,
                            double penalty) {
  Vec64 delta = updated.w;
  axpy(-1.0, global.w, delta);
  return ClientRoundStat{client_id, loss, penalty, norm2(delta)};
}

}  // namespace

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "local") return Algorithm::local;
  if (name == "fedavg") return Algorithm::fedavg;
  if (name == "pfedme") return Algorithm::pfedme;
  if (name == "pfedfair") return Algorithm::pfedfair;
  fail_validation("unknown algorithm '" + name +
                  "' (expected local|fedavg|pfedme|pfedfair)");
}

std::string algorithm_to_string(Algorithm a) {
  switch (a) {
    case Algorithm::local: return "local";
    case Algorithm::fedavg: return "fedavg";
    case Algorithm::pfedme: return "pfedme";
    case Algorithm::pfedfair: return "pfedfair";
  }
  return "?";
}

void FairFLConfig::validate() const {
  if (rounds < 0) fail_validation("config: rounds must be >= 0");
  if (inner_steps < 1) fail_validation("config: inner_steps must be >= 1");
  if (!(outer_step > 0.0) || !(inner_step > 0.0))
    fail_validation("config: step sizes must be positive");
  if (!(lambda >= 0.0)) fail_validation("config: lambda must be >= 0");
  if (!(gamma > 0.0)) fail_validation("config: gamma must be positive");
  if (!(participation > 0.0) || participation > 1.0)
    fail_validation("config: participation must lie in (0,1]");
  fairness.validate();
  if (arch == Arch::mlp && hidden.empty())
    fail_validation("config: mlp architecture requires hidden widths");
}

ModelParams moreau_argmin_generic(const ModelParams& anchor, const GradFn& grad,
                                  int steps, double step_size, double gamma) {
  ModelParams w = anchor;
  for (int k = 0; k < steps; ++k) {
    Vec64 g = grad(w);
    // prox term gradient: gamma * (w - anchor)
    for (std::size_t j = 0; j < w.w.size(); ++j)
      g[j] += gamma * (w.w[j] - anchor.w[j]);
    axpy(-step_size, g, w.w);
  }
  return w;
}

ModelParams moreau_argmin(const ModelParams& global_w,
                          const ClientDataset& client_data,
                          const FairFLConfig& cfg) {
  const bool fair = cfg.inner_objective == InnerObjective::fair;
  GradFn grad = [&](const ModelParams& w) {
    return fair ? fair_loss_and_grad(w, client_data, cfg.fairness).gradient
                : bce_loss_and_grad(w, client_data).gradient;
  };
  ModelParams w = moreau_argmin_generic(global_w, grad, cfg.inner_steps,
                                        cfg.inner_step, cfg.gamma);
  if (!std::isfinite(norm2(w.w)))
    fail_runtime("moreau_argmin produced a non-finite iterate");
  return w;
}

RoundLog pfedfair_round(FederationState& state,
                        std::span<const ClientDataset> clients,
                        const FairFLConfig& cfg) {
  RoundLog log;
  log.round = state.round;
  const auto ids = participating_clients(clients.size(), cfg, state.round);
  std::vector<std::pair<int, Vec64>> updates;
  updates.reserve(ids.size());
  for (std::size_t i : ids) {
    const auto& data = clients[i];
    const LossReport clean = bce_loss_and_grad(state.global, data);
    ModelParams personalized = moreau_argmin(state.global, data, cfg);
    check_finite(personalized, state.round, data.client_id);

    // Envelope gradient of the personalized fair loss at the global point.
    Vec64 g_fair = state.global.w;
    axpy(-1.0, personalized.w, g_fair);
    for (double& v : g_fair) v *= cfg.gamma;

    ModelParams updated = state.global;
    for (std::size_t j = 0; j < updated.w.size(); ++j)
      updated.w[j] -= cfg.outer_step *
                      (clean.gradient[j] + cfg.lambda * g_fair[j]);
    check_finite(updated, state.round, data.client_id);

    const double penalty =
        cfg.fairness.eta > 0.0
            ? kde_ddp_penalty_and_grad(personalized, data,
                                       cfg.fairness.bandwidth_h)
                  .penalty
            : 0.0;
    log.clients.push_back(client_stat(data.client_id, updated, state.global,
                                      clean.mean_loss, penalty));
    state.personalized[i] = std::move(personalized);
    updates.emplace_back(data.client_id, std::move(updated.w));
  }
  state.global = average_models(state.global, updates);
  check_finite(state.global, state.round, -1);
  log.global_norm = norm2(state.global.w);
  state.round += 1;
  return log;
}

RoundLog fedavg_round(FederationState& state,
                      std::span<const ClientDataset> clients,
                      const FairFLConfig& cfg) {
  RoundLog log;
  log.round = state.round;
  const auto ids = participating_clients(clients.size(), cfg, state.round);
  std::vector<std::pair<int, Vec64>> updates;
  updates.reserve(ids.size());
  for (std::size_t i : ids) {
    const auto& data = clients[i];
    ModelParams w = state.global;
    double last_loss = 0.0;
    for (int k = 0; k < cfg.inner_steps; ++k) {
      const LossReport rep = fair_loss_and_grad(w, data, cfg.fairness);
      axpy(-cfg.inner_step, rep.gradient, w.w);
      last_loss = rep.mean_loss;
    }
    check_finite(w, state.round, data.client_id);
    log.clients.push_back(
        client_stat(data.client_id, w, state.global, last_loss, 0.0));
    updates.emplace_back(data.client_id, std::move(w.w));
  }
  state.global = average_models(state.global, updates);
  check_finite(state.global, state.round, -1);
  // The global model is also every client's evaluation model.
  for (auto& p : state.personalized) p = state.global;
  log.global_norm = norm2(state.global.w);
  state.round += 1;
  return log;
}

RoundLog pfedme_round(FederationState& state,
                      std::span<const ClientDataset> clients,
                      const FairFLConfig& cfg) {
  // Note: lambda plays no role in pFedMe; the whole objective is inside the
  // Moreau envelope and the client moves along its gradient.
  RoundLog log;
  log.round = state.round;
  const auto ids = participating_clients(clients.size(), cfg, state.round);
  std::vector<std::pair<int, Vec64>> updates;
  updates.reserve(ids.size());
  FairFLConfig inner_cfg = cfg;
  inner_cfg.inner_objective = InnerObjective::fair;
  for (std::size_t i : ids) {
    const auto& data = clients[i];
    ModelParams personalized = moreau_argmin(state.global, data, inner_cfg);
    check_finite(personalized, state.round, data.client_id);

    ModelParams updated = state.global;
    for (std::size_t j = 0; j < updated.w.size(); ++j)
      updated.w[j] -= cfg.outer_step * cfg.gamma *
                      (state.global.w[j] - personalized.w[j]);
    check_finite(updated, state.round, data.client_id);

    log.clients.push_back(client_stat(data.client_id, updated, state.global,
                                      0.0, 0.0));
    state.personalized[i] = std::move(personalized);
    updates.emplace_back(data.client_id, std::move(updated.w));
  }
  state.global = average_models(state.global, updates);
  check_finite(state.global, state.round, -1);
  log.global_norm = norm2(state.global.w);
  state.round += 1;
  return log;
}

RoundLog local_round(FederationState& state,
                     std::span<const ClientDataset> clients,
                     const FairFLConfig& cfg) {
  RoundLog log;
  log.round = state.round;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    const auto& data = clients[i];
    ModelParams& w = state.personalized[i];
    double last_loss = 0.0;
    for (int k = 0; k < cfg.inner_steps; ++k) {
      const LossReport rep = fair_loss_and_grad(w, data, cfg.fairness);
      axpy(-cfg.inner_step, rep.gradient, w.w);
      last_loss = rep.mean_loss;
    }
    check_finite(w, state.round, data.client_id);
    log.clients.push_back(ClientRoundStat{data.client_id, last_loss, 0.0, 0.0});
  }
  log.global_norm = norm2(state.global.w);
  state.round += 1;
  return log;
}

TrainResult train(std::span<const ClientDataset> clients,
                  const FairFLConfig& cfg) {
  cfg.validate();
  if (clients.empty()) fail_validation("train: need at least one client");
  const std::size_t d = clients[0].dim();
  for (const auto& c : clients) {
    if (c.samples.empty())
      fail_validation("train: client " + std::to_string(c.client_id) +
                      " has an empty shard");
    if (c.dim() != d)
      fail_validation("train: inconsistent feature dimensions across clients");
    if (cfg.fairness.eta > 0.0 && !c.has_both_groups())
      fail_validation("train: client " + std::to_string(c.client_id) +
                      " lacks one sensitive group needed for fair training");
  }

  TrainResult result;
  Rng init_rng(cfg.seed, kInitStream);
  result.state.global = init_model(cfg.arch, d, cfg.hidden, init_rng);
  result.state.personalized.assign(clients.size(), result.state.global);

  for (int t = 0; t < cfg.rounds; ++t) {
    RoundLog log;
    switch (cfg.algorithm) {
      case Algorithm::local:
        log = local_round(result.state, clients, cfg);
        break;
      case Algorithm::fedavg:
        log = fedavg_round(result.state, clients, cfg);
        break;
      case Algorithm::pfedme:
        log = pfedme_round(result.state, clients, cfg);
        break;
      case Algorithm::pfedfair:
        log = pfedfair_round(result.state, clients, cfg);
        break;
    }
    result.logs.push_back(std::move(log));
  }
  return result;
}

std::vector<MetricsRecord> evaluate(const FederationState& state,
                                    std::span<const ClientDataset> test_clients,
                                    const FairFLConfig& cfg) {
  std::vector<MetricsRecord> records;
  records.reserve(test_clients.size());
  for (std::size_t i = 0; i < test_clients.size(); ++i) {
    const auto& data = test_clients[i];
    if (data.samples.empty())
      fail_validation("evaluate: client " + std::to_string(data.client_id) +
                      " has an empty test shard");
    const ModelParams& model = cfg.algorithm == Algorithm::fedavg
                                   ? state.global
                                   : state.personalized[i];
    std::vector<int> yhat(data.samples.size());
    std::vector<int> s(data.samples.size());
    for (std::size_t j = 0; j < data.samples.size(); ++j) {
      yhat[j] = predict(model, data.samples[j].x);
      s[j] = data.samples[j].s;
    }
    MetricsRecord rec;
    rec.client_id = data.client_id;
    rec.test_error = zero_one_risk(model, data);
    rec.acc = 1.0 - rec.test_error;
    rec.ddp_sum = ddp_hard(yhat, s);
    rec.ddp_gap = 0.5 * rec.ddp_sum;
    rec.npr0 = npr(yhat, s, 0);
    rec.npr1 = npr(yhat, s, 1);
    rec.bce = bce_loss_and_grad(model, data).mean_loss;
    records.push_back(rec);
  }
  return records;
}

}  // namespace fairfl
