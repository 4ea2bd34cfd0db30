#pragma once

#include <string>
#include <vector>

#include "data.hpp"
#include "numerics.hpp"

namespace fairfl {

enum class Arch { linear, mlp };

// Flat weight vector for a linear classifier or a tanh MLP with scalar
// output logit. Layout per layer: weight matrix (out x in, row-major)
// followed by the bias vector.
struct ModelParams {
  Arch arch = Arch::linear;
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;  // empty for linear
  Vec64 w;

  std::size_t param_count() const;
  void validate() const;
};

ModelParams init_model(Arch arch, std::size_t input_dim,
                       const std::vector<std::size_t>& hidden, Rng& rng);

double forward(const ModelParams& params, std::span<const double> x);
int predict(const ModelParams& params, std::span<const double> x);

// Caches per-layer activations of one forward pass so a scalar upstream
// gradient dL/dlogit can be pushed back through the network.
struct ForwardTrace {
  std::vector<Vec64> activations;  // activations[0] is the input
  double logit = 0.0;
};
ForwardTrace forward_traced(const ModelParams& params,
                            std::span<const double> x);
// grad += coeff * d(logit)/d(w), evaluated at the traced point.
void backward_logit(const ModelParams& params, const ForwardTrace& trace,
                    double coeff, std::span<double> grad);

struct LossReport {
  double mean_loss = 0.0;
  Vec64 gradient;
};

LossReport bce_loss_and_grad(const ModelParams& params,
                             const ClientDataset& data);
double zero_one_risk(const ModelParams& params, const ClientDataset& data);

double sigmoid(double z);

// Checkpoint I/O: magic "FFLC", architecture header, then one or more f64
// weight vectors (global first, then personalized models in client order).
void save_checkpoint(const std::string& path, const ModelParams& global,
                     const std::vector<ModelParams>& personalized);
struct Checkpoint {
  ModelParams global;
  std::vector<ModelParams> personalized;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace fairfl
