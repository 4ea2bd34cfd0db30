#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "model.hpp"

using namespace fairfl;

namespace {

ClientDataset random_dataset(std::size_t n, std::size_t d, Rng& rng) {
  ClientDataset data;
  data.client_id = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Vec64 x(d);
    for (double& v : x) v = rng.normal();
    data.samples.push_back(Sample{std::move(x), rng.bernoulli(0.5) ? 1 : 0,
                                  rng.bernoulli(0.5) ? 1 : 0});
  }
  return data;
}

// Central finite differences of the mean BCE loss.
Vec64 fd_gradient(ModelParams params, const ClientDataset& data, double step) {
  Vec64 g(params.w.size());
  for (std::size_t j = 0; j < params.w.size(); ++j) {
    const double saved = params.w[j];
    params.w[j] = saved + step;
    const double up = bce_loss_and_grad(params, data).mean_loss;
    params.w[j] = saved - step;
    const double down = bce_loss_and_grad(params, data).mean_loss;
    params.w[j] = saved;
    g[j] = (up - down) / (2 * step);
  }
  return g;
}

}  // namespace

TEST_CASE("forward linear hand cases") {
  ModelParams p;
  p.arch = Arch::linear;
  p.input_dim = 2;
  p.w = {1.0, -1.0, 0.0};  // weights then bias
  CHECK(forward(p, Vec64{2, 1}) == 1.0);
  p.w = {0.0, 0.0, 0.0};
  CHECK(forward(p, Vec64{5, -3}) == 0.0);
  CHECK_THROWS_AS(forward(p, Vec64{1}), Error);
}

TEST_CASE("forward mlp against hand computation") {
  // One hidden unit: h = tanh(0.5*x0 - 0.25*x1 + 0.1), logit = 2h - 0.3
  ModelParams p;
  p.arch = Arch::mlp;
  p.input_dim = 2;
  p.hidden = {1};
  p.w = {0.5, -0.25, 0.1, 2.0, -0.3};
  const Vec64 x{1.0, 2.0};
  const double h = std::tanh(0.5 * 1.0 - 0.25 * 2.0 + 0.1);
  CHECK(forward(p, x) == doctest::Approx(2.0 * h - 0.3).epsilon(1e-12));

  // forward is pure: repeated calls are bit-identical
  CHECK(forward(p, x) == forward(p, x));
}

TEST_CASE("predict threshold and tie rule") {
  ModelParams p;
  p.arch = Arch::linear;
  p.input_dim = 1;
  p.w = {1.0, 0.0};
  CHECK(predict(p, Vec64{1.0}) == 1);
  CHECK(predict(p, Vec64{0.0}) == 0);  // logit exactly 0 predicts 0
  CHECK(predict(p, Vec64{-0.3}) == 0);
}

TEST_CASE("bce hand values and limits") {
  ModelParams p;
  p.arch = Arch::linear;
  p.input_dim = 1;
  p.w = {0.0, 0.0};
  ClientDataset data{0, {Sample{{1.0}, 0, 1}}};
  CHECK(bce_loss_and_grad(p, data).mean_loss ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // perfectly separated with huge margin: loss tends to zero
  p.w = {50.0, 0.0};
  ClientDataset sep{0, {Sample{{1.0}, 0, 1}, Sample{{-1.0}, 1, 0}}};
  CHECK(bce_loss_and_grad(p, sep).mean_loss < 1e-12);

  // confident mistake stays finite thanks to probability clipping
  ClientDataset wrong{0, {Sample{{1.0}, 0, 0}}};
  p.w = {1000.0, 0.0};
  CHECK(std::isfinite(bce_loss_and_grad(p, wrong).mean_loss));
  CHECK_THROWS_AS(bce_loss_and_grad(p, ClientDataset{}), Error);
}

TEST_CASE("bce gradient matches finite differences on both architectures") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed, 77);
    const auto data = random_dataset(20, 3, rng);
    for (int arch = 0; arch < 2; ++arch) {
      ModelParams p = arch == 0 ? init_model(Arch::linear, 3, {}, rng)
                                : init_model(Arch::mlp, 3, {4, 3}, rng);
      const Vec64 analytic = bce_loss_and_grad(p, data).gradient;
      const Vec64 fd = fd_gradient(p, data, 1e-5);
      for (std::size_t j = 0; j < analytic.size(); ++j) {
        const double scale =
            std::max({1.0, std::abs(analytic[j]), std::abs(fd[j])});
        CHECK(std::abs(analytic[j] - fd[j]) / scale < 1e-4);
      }
    }
  }
}

TEST_CASE("linear bce is convex along random segments") {
  Rng rng(4, 0);
  const auto data = random_dataset(30, 4, rng);
  for (int trial = 0; trial < 5; ++trial) {
    ModelParams a = init_model(Arch::linear, 4, {}, rng);
    ModelParams b = init_model(Arch::linear, 4, {}, rng);
    const double fa = bce_loss_and_grad(a, data).mean_loss;
    const double fb = bce_loss_and_grad(b, data).mean_loss;
    for (int k = 0; k <= 10; ++k) {
      const double t = k / 10.0;
      ModelParams mid = a;
      for (std::size_t j = 0; j < mid.w.size(); ++j)
        mid.w[j] = t * a.w[j] + (1 - t) * b.w[j];
      const double fm = bce_loss_and_grad(mid, data).mean_loss;
      CHECK(fm <= t * fa + (1 - t) * fb + 1e-9);
    }
  }
}

TEST_CASE("zero_one_risk") {
  ModelParams p;
  p.arch = Arch::linear;
  p.input_dim = 1;
  p.w = {1.0, 0.0};
  ClientDataset right{0, {Sample{{1.0}, 0, 1}, Sample{{-1.0}, 0, 0}}};
  CHECK(zero_one_risk(p, right) == 0.0);
  ClientDataset wrong{0, {Sample{{1.0}, 0, 0}, Sample{{-1.0}, 0, 1}}};
  CHECK(zero_one_risk(p, wrong) == 1.0);
  ClientDataset half{0,
                     {Sample{{1.0}, 0, 1}, Sample{{-1.0}, 0, 0},
                      Sample{{2.0}, 0, 0}, Sample{{-2.0}, 0, 1}}};
  CHECK(zero_one_risk(p, half) == 0.5);
}

TEST_CASE("init_model respects fan-in bounds and validates") {
  Rng rng(8, 0);
  const ModelParams p = init_model(Arch::mlp, 10, {6}, rng);
  CHECK(p.param_count() == 10 * 6 + 6 + 6 + 1);
  CHECK(p.w.size() == p.param_count());
  const double bound0 = 1.0 / std::sqrt(10.0);
  for (std::size_t j = 0; j < 66; ++j) CHECK(std::abs(p.w[j]) <= bound0);

  ModelParams bad = p;
  bad.w.pop_back();
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("checkpoint round trip") {
  Rng rng(12, 0);
  const ModelParams global = init_model(Arch::mlp, 5, {3}, rng);
  std::vector<ModelParams> personalized{init_model(Arch::mlp, 5, {3}, rng),
                                        init_model(Arch::mlp, 5, {3}, rng)};
  const auto path =
      (std::filesystem::temp_directory_path() / "fairfl_ckpt_test.bin").string();
  save_checkpoint(path, global, personalized);
  const Checkpoint ckpt = load_checkpoint(path);
  CHECK(ckpt.global.w == global.w);
  CHECK(ckpt.global.hidden == global.hidden);
  REQUIRE(ckpt.personalized.size() == 2);
  CHECK(ckpt.personalized[0].w == personalized[0].w);
  CHECK(ckpt.personalized[1].w == personalized[1].w);
  CHECK_THROWS_AS(load_checkpoint(path + ".missing"), Error);
}
