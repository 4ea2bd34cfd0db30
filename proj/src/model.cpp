#include "model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace fairfl {

namespace {

// Clip probabilities inside logs so confident mistakes stay finite.
constexpr double kProbClip = 1e-12;

std::vector<std::size_t> layer_widths(const ModelParams& p) {
  std::vector<std::size_t> widths;
  widths.push_back(p.input_dim);
  for (std::size_t h : p.hidden) widths.push_back(h);
  widths.push_back(1);
  return widths;
}

template <class T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T read_raw(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

std::size_t ModelParams::param_count() const {
  const auto widths = layer_widths(*this);
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    count += widths[l + 1] * widths[l] + widths[l + 1];
  return count;
}

void ModelParams::validate() const {
  if (arch == Arch::linear && !hidden.empty())
    fail_validation("linear model must have no hidden layers");
  if (arch == Arch::mlp && hidden.empty())
    fail_validation("mlp model requires at least one hidden layer");
  if (w.size() != param_count())
    fail_validation("flat weight length " + std::to_string(w.size()) +
                    " does not match architecture (" +
                    std::to_string(param_count()) + " expected)");
}

ModelParams init_model(Arch arch, std::size_t input_dim,
                       const std::vector<std::size_t>& hidden, Rng& rng) {
  ModelParams p;
  p.arch = arch;
  p.input_dim = input_dim;
  p.hidden = arch == Arch::mlp ? hidden : std::vector<std::size_t>{};
  p.w.resize(p.param_count());
  const auto widths = layer_widths(p);
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    const std::size_t block = widths[l + 1] * widths[l] + widths[l + 1];
    for (std::size_t k = 0; k < block; ++k)
      p.w[off + k] = rng.uniform(-bound, bound);
    off += block;
  }
  p.validate();
  return p;
}

ForwardTrace forward_traced(const ModelParams& params,
                            std::span<const double> x) {
  if (x.size() != params.input_dim)
    fail_validation("forward: input dimension " + std::to_string(x.size()) +
                    " does not match model dimension " +
                    std::to_string(params.input_dim));
  ForwardTrace trace;
  trace.activations.emplace_back(x.begin(), x.end());
  const auto widths = layer_widths(params);
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in_w = widths[l], out_w = widths[l + 1];
    const Vec64& a = trace.activations.back();
    Vec64 z(out_w, 0.0);
    for (std::size_t i = 0; i < out_w; ++i) {
      double acc = params.w[off + out_w * in_w + i];  // bias
      const double* row = params.w.data() + off + i * in_w;
      for (std::size_t j = 0; j < in_w; ++j) acc += row[j] * a[j];
      z[i] = acc;
    }
    off += out_w * in_w + out_w;
    const bool last = l + 2 == widths.size();
    if (!last)
      for (double& v : z) v = std::tanh(v);
    trace.activations.push_back(std::move(z));
  }
  trace.logit = trace.activations.back()[0];
  return trace;
}

void backward_logit(const ModelParams& params, const ForwardTrace& trace,
                    double coeff, std::span<double> grad) {
  if (grad.size() != params.w.size())
    fail_validation("backward: gradient buffer length mismatch");
  const auto widths = layer_widths(params);
  const std::size_t n_layers = widths.size() - 1;

  std::vector<std::size_t> offsets(n_layers);
  std::size_t off = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    offsets[l] = off;
    off += widths[l + 1] * widths[l] + widths[l + 1];
  }

  // delta holds dL/d(pre-activation) of the current layer.
  Vec64 delta{coeff};
  for (std::size_t l = n_layers; l-- > 0;) {
    const std::size_t in_w = widths[l], out_w = widths[l + 1];
    const Vec64& a = trace.activations[l];
    const std::size_t base = offsets[l];
    for (std::size_t i = 0; i < out_w; ++i) {
      double* grow = grad.data() + base + i * in_w;
      for (std::size_t j = 0; j < in_w; ++j) grow[j] += delta[i] * a[j];
      grad[base + out_w * in_w + i] += delta[i];
    }
    if (l == 0) break;
    Vec64 prev(in_w, 0.0);
    for (std::size_t i = 0; i < out_w; ++i) {
      const double* row = params.w.data() + base + i * in_w;
      for (std::size_t j = 0; j < in_w; ++j) prev[j] += row[j] * delta[i];
    }
    // a is tanh(pre-activation) for hidden layers: d tanh = 1 - tanh^2.
    for (std::size_t j = 0; j < in_w; ++j) prev[j] *= 1.0 - a[j] * a[j];
    delta = std::move(prev);
  }
}

double forward(const ModelParams& params, std::span<const double> x) {
  if (params.arch == Arch::linear) {
    if (x.size() != params.input_dim)
      fail_validation("forward: input dimension " + std::to_string(x.size()) +
                      " does not match model dimension " +
                      std::to_string(params.input_dim));
    double acc = params.w[params.input_dim];
    for (std::size_t j = 0; j < params.input_dim; ++j)
      acc += params.w[j] * x[j];
    return acc;
  }
  return forward_traced(params, x).logit;
}

int predict(const ModelParams& params, std::span<const double> x) {
  // Tie at exactly zero logit predicts 0.
  return forward(params, x) > 0.0 ? 1 : 0;
}

double sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LossReport bce_loss_and_grad(const ModelParams& params,
                             const ClientDataset& data) {
  if (data.samples.empty()) fail_validation("bce_loss_and_grad: empty dataset");
  LossReport report;
  report.gradient.assign(params.w.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(data.samples.size());
  double loss = 0.0;
  for (const auto& smp : data.samples) {
    const ForwardTrace trace = forward_traced(params, smp.x);
    double p = sigmoid(trace.logit);
    p = std::min(1.0 - kProbClip, std::max(kProbClip, p));
    loss += smp.y == 1 ? -std::log(p) : -std::log(1.0 - p);
    const double coeff = (sigmoid(trace.logit) - static_cast<double>(smp.y)) *
                         inv_n;
    backward_logit(params, trace, coeff, report.gradient);
  }
  report.mean_loss = loss * inv_n;
  return report;
}

double zero_one_risk(const ModelParams& params, const ClientDataset& data) {
  if (data.samples.empty()) fail_validation("zero_one_risk: empty dataset");
  std::size_t wrong = 0;
  for (const auto& smp : data.samples)
    if (predict(params, smp.x) != smp.y) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(data.samples.size());
}

void save_checkpoint(const std::string& path, const ModelParams& global,
                     const std::vector<ModelParams>& personalized) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_runtime("cannot write checkpoint: " + path);
  out.write("FFLC", 4);
  write_raw(out, static_cast<std::uint32_t>(global.arch == Arch::mlp ? 1 : 0));
  write_raw(out, static_cast<std::uint32_t>(global.input_dim));
  write_raw(out, static_cast<std::uint32_t>(global.hidden.size()));
  for (std::size_t h : global.hidden)
    write_raw(out, static_cast<std::uint32_t>(h));
  write_raw(out, static_cast<std::uint32_t>(personalized.size()));
  write_raw(out, static_cast<std::uint32_t>(global.w.size()));
  auto write_weights = [&](const ModelParams& m) {
    if (m.w.size() != global.w.size())
      fail_validation("checkpoint: personalized model dimension mismatch");
    out.write(reinterpret_cast<const char*>(m.w.data()),
              static_cast<std::streamsize>(m.w.size() * sizeof(double)));
  };
  write_weights(global);
  for (const auto& m : personalized) write_weights(m);
  if (!out) fail_runtime("I/O error writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_validation("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "FFLC", 4) != 0)
    fail_validation("bad magic bytes in checkpoint: " + path);
  Checkpoint ckpt;
  ckpt.global.arch = read_raw<std::uint32_t>(in) == 1 ? Arch::mlp : Arch::linear;
  ckpt.global.input_dim = read_raw<std::uint32_t>(in);
  const std::uint32_t n_hidden = read_raw<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_hidden; ++i)
    ckpt.global.hidden.push_back(read_raw<std::uint32_t>(in));
  const std::uint32_t m = read_raw<std::uint32_t>(in);
  const std::uint32_t n_params = read_raw<std::uint32_t>(in);
  auto read_weights = [&]() {
    Vec64 w(n_params);
    in.read(reinterpret_cast<char*>(w.data()),
            static_cast<std::streamsize>(w.size() * sizeof(double)));
    return w;
  };
  ckpt.global.w = read_weights();
  ckpt.global.validate();
  for (std::uint32_t i = 0; i < m; ++i) {
    ModelParams p = ckpt.global;
    p.w = read_weights();
    ckpt.personalized.push_back(std::move(p));
  }
  if (!in) fail_validation("truncated checkpoint: " + path);
  return ckpt;
}

}  // namespace fairfl
