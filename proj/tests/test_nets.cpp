#include <doctest.h>

#include <cmath>

#include "mimic/nets.hpp"
#include "oracles.hpp"

using namespace mimic;

namespace {

double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Loss c . net(x); compares the analytic gradient with central differences on up
// to 100 random coordinates.
void gradient_check(Mlp net, Rng& rng) {
  Vector x(net.input_dim()), c(net.output_dim());
  for (double& v : x) v = rng.normal();
  for (double& v : c) v = rng.normal();
  auto grads = net.backward(x, c);
  std::vector<double> theta(net.params().begin(), net.params().end());
  auto loss = [&](std::vector<double>& p) {
    std::copy(p.begin(), p.end(), net.params().begin());
    return dot(net.forward(x), c);
  };
  const std::size_t n = net.parameter_count();
  for (int k = 0; k < 100; ++k) {
    const std::size_t i = rng.index(n);
    const double numeric = oracle::central_difference(loss, theta, i);
    const double analytic = grads.values[i];
    if (std::abs(analytic) < 1e-7 && std::abs(numeric) < 1e-7) continue;
    CHECK(oracle::relative_error(analytic, numeric) < 1e-4);
  }
}

}  // namespace

TEST_CASE("parameter layout") {
  Mlp net({3, 5, 2}, Head::Identity);
  CHECK(net.parameter_count() == 3 * 5 + 5 + 5 * 2 + 2);
  CHECK(net.weights(0).size() == 15);
  CHECK(net.biases(1).size() == 2);
  CHECK(net.make_grad().size() == net.parameter_count());
}

TEST_CASE("zero-weight log-softmax head is uniform") {
  Mlp net({6, 8, 4}, Head::LogSoftmax);
  for (double v : net.forward(Vector(6, 0.7))) CHECK(v == doctest::Approx(std::log(0.25)));
}

TEST_CASE("zero hidden layers is an affine map") {
  Mlp net({2, 1}, Head::Identity);
  auto p = net.params();
  p[0] = 2.0;
  p[1] = -1.0;
  p[2] = 0.5;
  CHECK(net.forward(Vector{3.0, 4.0})[0] == doctest::Approx(2.0 * 3 - 4 + 0.5));
  auto g = net.backward(Vector{3.0, 4.0}, Vector{1.0});
  CHECK(g.values == std::vector<double>{3.0, 4.0, 1.0});
}

TEST_CASE("random net log-softmax normalizes and forward is deterministic") {
  Rng rng(31);
  auto net = Mlp::glorot({5, 16, 16, 7}, Head::LogSoftmax, rng);
  Vector x = {0.3, -1.2, 2.0, 0.0, 0.5};
  auto out = net.forward(x);
  double sum = 0.0;
  for (double v : out) sum += std::exp(v);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(net.forward(x) == out);
  CHECK_THROWS_AS(net.forward(Vector{1.0}), Error);
}

TEST_CASE("tanh unit gradient closed form") {
  Mlp net({1, 1, 1}, Head::Identity);
  auto p = net.params();
  p[0] = 0.5;  // first-layer weight w
  p[2] = 1.0;  // output weight
  const double x = 1.0;
  CHECK(net.forward(Vector{x})[0] == doctest::Approx(std::tanh(0.5)));
  auto g = net.backward(Vector{x}, Vector{1.0});
  const double th = std::tanh(0.5 * x);
  CHECK(g.values[0] == doctest::Approx(x * (1.0 - th * th)).epsilon(1e-14));
}

TEST_CASE("linear one-parameter gradient") {
  Mlp net({1, 1}, Head::Identity);
  net.params()[0] = 0.25;
  CHECK(net.backward(Vector{3.0}, Vector{1.0}).values[0] == 3.0);
}

TEST_CASE("gradient check on every network shape in use") {
  Rng rng(32);
  // Policies (log-softmax over actions), discriminators and reward models (scalar).
  gradient_check(Mlp::glorot({25, 32, 32, 4}, Head::LogSoftmax, rng), rng);
  gradient_check(Mlp::glorot({24, 32, 32, 4}, Head::LogSoftmax, rng), rng);
  gradient_check(Mlp::glorot({2, 32, 32, 3}, Head::LogSoftmax, rng), rng);
  gradient_check(Mlp::glorot({29, 32, 32, 1}, Head::Identity, rng), rng);
  gradient_check(Mlp::glorot({5, 32, 32, 1}, Head::Identity, rng), rng);
  gradient_check(Mlp::glorot({3, 7, 1}, Head::Identity, rng), rng);
  gradient_check(Mlp::glorot({3, 2}, Head::LogSoftmax, rng), rng);
}

TEST_CASE("backward accumulates") {
  Rng rng(33);
  auto net = Mlp::glorot({3, 4, 2}, Head::Identity, rng);
  Vector x = {1, 2, 3}, c = {0.5, -1};
  auto once = net.backward(x, c);
  auto twice = net.make_grad();
  net.backward(x, c, twice);
  net.backward(x, c, twice);
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(twice.values[i] == 2.0 * once.values[i]);
}

TEST_CASE("stable scalar helpers") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(softplus(-20.0) == doctest::Approx(2.0611536e-9).epsilon(1e-6));
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(std::isfinite(softplus(-800.0)));
  CHECK(sigmoid(std::log(3.0)) == doctest::Approx(0.75));
  CHECK(log_sum_exp(Vector{1000.0, 1000.0}) == doctest::Approx(1000.0 + std::log(2.0)));
  auto ls = log_softmax(Vector{1000.0, 0.0});
  CHECK(std::isfinite(ls[1]));
}

TEST_CASE("Adam first step moves each coordinate by lr") {
  AdamConfig cfg;
  cfg.lr = 0.01;
  AdamState adam(3, cfg);
  std::vector<double> p = {1.0, 2.0, 3.0};
  adam_step(adam, p, std::vector<double>{0.5, -4.0, 100.0});
  CHECK(p[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(2.0 + 0.01).epsilon(1e-6));
  CHECK(p[2] == doctest::Approx(3.0 - 0.01).epsilon(1e-6));
  CHECK(adam.step_count() == 1);
}

TEST_CASE("Adam with zero gradient leaves parameters unchanged") {
  AdamState adam(2, {});
  std::vector<double> p = {1.5, -2.5};
  for (int i = 0; i < 10; ++i) adam_step(adam, p, std::vector<double>{0.0, 0.0});
  CHECK(p == std::vector<double>{1.5, -2.5});
}

TEST_CASE("Adam is deterministic and rejects bad gradients") {
  AdamState a(2, {}), b(2, {});
  std::vector<double> pa = {1.0, 1.0}, pb = {1.0, 1.0};
  adam_step(a, pa, std::vector<double>{0.3, 0.7});
  adam_step(b, pb, std::vector<double>{0.3, 0.7});
  CHECK(pa == pb);
  CHECK_THROWS_AS(adam_step(a, pa, std::vector<double>{NAN, 0.0}), Error);
  CHECK_THROWS_AS(adam_step(a, pa, std::vector<double>{0.0}), Error);
}

TEST_CASE("clip_grad_norm") {
  std::vector<double> g = {3.0, 4.0};
  CHECK(clip_grad_norm(g, 1.0) == doctest::Approx(5.0));
  CHECK(g[0] == doctest::Approx(0.6));
  std::vector<double> small = {0.1};
  clip_grad_norm(small, 1.0);
  CHECK(small[0] == 0.1);
}

TEST_CASE("network serialization round-trip") {
  Rng rng(34);
  auto net = Mlp::glorot({4, 6, 3}, Head::LogSoftmax, rng);
  CHECK(mlp_from_json(Json::parse(to_json(net).dump())) == net);
}
