#pragma once

#include <functional>
#include <span>
#include <utility>

#include "fairness.hpp"

namespace fairfl {

enum class Algorithm { local, fedavg, pfedme, pfedfair };
enum class InnerObjective { fair, clean };

Algorithm algorithm_from_string(const std::string& name);
std::string algorithm_to_string(Algorithm a);

struct FairFLConfig {
  Algorithm algorithm = Algorithm::pfedfair;
  int rounds = 1;          // T
  int inner_steps = 10;    // K
  double outer_step = 0.25;   // alpha
  double inner_step = 0.05;   // alpha_in
  double lambda = 0.4;
  double gamma = 1.0;
  FairnessPenaltyConfig fairness;
  InnerObjective inner_objective = InnerObjective::fair;
  double participation = 1.0;
  std::uint64_t seed = 1;
  Arch arch = Arch::linear;
  std::vector<std::size_t> hidden;

  void validate() const;
};

struct ClientRoundStat {
  int client_id = 0;
  double train_loss = 0.0;
  double fair_penalty = 0.0;
  double update_norm = 0.0;  // ||w_tilde_i - w||
};

struct RoundLog {
  int round = 0;
  std::vector<ClientRoundStat> clients;
  double global_norm = 0.0;
};

struct FederationState {
  ModelParams global;
  std::vector<ModelParams> personalized;
  int round = 0;
};

struct MetricsRecord {
  int client_id = 0;
  double acc = 0.0;
  double test_error = 0.0;
  double ddp_sum = 0.0;   // sum over both labels, range [0,2]
  double ddp_gap = 0.0;   // half of ddp_sum, the positive-rate gap
  double npr0 = 0.0;
  double npr1 = 0.0;
  double bce = 0.0;
};

// Generic proximal inner solver: K gradient steps on
// loss(w_i) + (gamma/2)||w_i - anchor||^2, initialized at the anchor.
using GradFn = std::function<Vec64(const ModelParams&)>;
ModelParams moreau_argmin_generic(const ModelParams& anchor, const GradFn& grad,
                                  int steps, double step_size, double gamma);

ModelParams moreau_argmin(const ModelParams& global_w,
                          const ClientDataset& client_data,
                          const FairFLConfig& cfg);

RoundLog pfedfair_round(FederationState& state,
                        std::span<const ClientDataset> clients,
                        const FairFLConfig& cfg);
RoundLog fedavg_round(FederationState& state,
                      std::span<const ClientDataset> clients,
                      const FairFLConfig& cfg);
RoundLog pfedme_round(FederationState& state,
                      std::span<const ClientDataset> clients,
                      const FairFLConfig& cfg);
RoundLog local_round(FederationState& state,
                     std::span<const ClientDataset> clients,
                     const FairFLConfig& cfg);

struct TrainResult {
  FederationState state;
  std::vector<RoundLog> logs;
};
TrainResult train(std::span<const ClientDataset> clients,
                  const FairFLConfig& cfg);

std::vector<MetricsRecord> evaluate(const FederationState& state,
                                    std::span<const ClientDataset> test_clients,
                                    const FairFLConfig& cfg);

}  // namespace fairfl
