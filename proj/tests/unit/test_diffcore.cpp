#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "common/gradcheck.hpp"
#include "nsbi/diffcore/adam.hpp"
#include "nsbi/diffcore/layers.hpp"

using namespace nsbi::diff;

namespace {

Tensor random_tensor(Shape s, std::mt19937_64& rng, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(s);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = u(rng);
  return t;
}

// Contract an op output with fixed random weights so every output entry matters.
Var weighted(const Var& y, const Tensor& w) { return sum(y * constant(w)); }

}  // namespace

TEST_SUITE("diffcore") {
  TEST_CASE("logsumexp is stable for large inputs") {
    Var x = constant(Tensor::vector({1000.0, 1000.0}));
    CHECK(logsumexp(x).item() == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
    Var big = constant(Tensor::vector({1e6, -1e6, 1e6}));
    CHECK(std::isfinite(logsumexp(big).item()));
  }

  TEST_CASE("tanh at zero") {
    Var x = parameter(Tensor::scalar(0.0), "x");
    Var y = tanh(x);
    backward(y);
    CHECK(y.item() == 0.0);
    CHECK(x.grad()[0] == doctest::Approx(1.0));
  }

  TEST_CASE("square at three has gradient six") {
    Var x = parameter(Tensor::scalar(3.0), "x");
    backward(x * x);
    CHECK(x.grad()[0] == doctest::Approx(6.0));
  }

  TEST_CASE("sum of c*x gives c") {
    Var x = parameter(Tensor::vector({1.0, -2.0, 0.5}), "x");
    Tensor c = Tensor::vector({0.3, -1.5, 2.0});
    backward(sum(constant(c) * x));
    for (std::size_t i = 0; i < 3; ++i) CHECK(x.grad()[i] == doctest::Approx(c[i]));
  }

  TEST_CASE("backward rejects non-scalar roots") {
    Var x = parameter(Tensor::vector({1.0, 2.0}), "x");
    CHECK_THROWS_AS(backward(x * x), std::invalid_argument);
  }

  TEST_CASE("shape mismatch names both shapes") {
    Var a = constant(Tensor(Shape{2, 3}));
    Var b = constant(Tensor(Shape{4, 3}));
    try {
      (void)add(a, b);
      FAIL("expected a throw");
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[2x3]") != std::string::npos);
      CHECK(msg.find("[4x3]") != std::string::npos);
    }
    CHECK_THROWS_AS(matmul(constant(Tensor(Shape{2, 3})), constant(Tensor(Shape{2, 3}))), std::invalid_argument);
  }

  TEST_CASE("broadcast add of a row vector") {
    Var a = parameter(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}), "a");
    Var b = parameter(Tensor::vector({10, 20, 30}), "b");
    Var y = a + b;
    CHECK(y.value().at(1, 2) == 36.0);
    backward(sum(y));
    CHECK(b.grad()[0] == 2.0);
  }

  TEST_CASE("every primitive matches central differences") {
    std::mt19937_64 rng(7);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
      const Tensor w23 = random_tensor(Shape{2, 3}, rng);
      Var a = parameter(random_tensor(Shape{2, 3}, rng), "a");
      Var b = parameter(random_tensor(Shape{2, 3}, rng), "b");
      Var row = parameter(random_tensor(Shape{3}, rng), "row");
      Var pos = parameter(random_tensor(Shape{2, 3}, rng, 0.2, 2.0), "pos");
      Var m32 = parameter(random_tensor(Shape{3, 2}, rng), "m32");
      const Tensor w22 = random_tensor(Shape{2, 2}, rng);
      const Tensor w26 = random_tensor(Shape{2, 6}, rng);
      const Tensor w33 = random_tensor(Shape{3, 3}, rng);
      const Tensor w32 = random_tensor(Shape{3, 2}, rng);
      auto run = [&](std::vector<Var> in, std::function<Var()> f) { return testutil::max_grad_error(in, f); };
      worst = std::max(worst, run({a, b}, [&] { return weighted(a + b, w23); }));
      worst = std::max(worst, run({a, b}, [&] { return weighted(a - b, w23); }));
      worst = std::max(worst, run({a, b}, [&] { return weighted(a * b, w23); }));
      worst = std::max(worst, run({a, pos}, [&] { return weighted(a / pos, w23); }));
      worst = std::max(worst, run({a, row}, [&] { return weighted(a * row, w23); }));
      worst = std::max(worst, run({a}, [&] { return weighted(scale(a, -1.7), w23); }));
      worst = std::max(worst, run({a, m32}, [&] { return weighted(matmul(a, m32), w22); }));
      worst = std::max(worst, run({a}, [&] { return weighted(tanh(a), w23); }));
      worst = std::max(worst, run({a}, [&] { return weighted(relu(a), w23); }));
      worst = std::max(worst, run({a}, [&] { return weighted(exp(a), w23); }));
      worst = std::max(worst, run({pos}, [&] { return weighted(log(pos), w23); }));
      worst = std::max(worst, run({a}, [&] { return weighted(sigmoid(a), w23); }));
      worst = std::max(worst, run({a}, [&] { return weighted(logsumexp(a), Tensor::vector({0.7, -1.3})); }));
      worst = std::max(worst, run({a, b}, [&] { return weighted(concat({a, b}, 1), w26); }));
      worst = std::max(worst, run({a}, [&] { return weighted(slice(a, 1, 1, 2), w22); }));
      worst = std::max(worst, run({a}, [&] { return scale(sum(a * a), 0.5); }));
      worst = std::max(worst, run({a}, [&] { return mean(a * a); }));
      worst = std::max(worst, run({a}, [&] { return weighted(sum_axis(a, 0), Tensor::vector({1.0, -2.0, 0.5})); }));
      worst = std::max(worst, run({a}, [&] { return weighted(take_rows(a, {1, 0, 1}), w33); }));
      worst = std::max(worst, run({a}, [&] { return weighted(reshape(a, Shape{3, 2}), w32); }));
    }
    INFO("worst relative error " << worst);
    CHECK(worst < 1e-4);
  }

  TEST_CASE("matmul 2x3 by 3x2 gradient") {
    std::mt19937_64 rng(11);
    Var a = parameter(random_tensor(Shape{2, 3}, rng), "a");
    Var b = parameter(random_tensor(Shape{3, 2}, rng), "b");
    const Tensor w = random_tensor(Shape{2, 2}, rng);
    std::vector<Var> in{a, b};
    CHECK(testutil::max_grad_error(in, [&] { return weighted(matmul(a, b), w); }) < 1e-4);
  }

  TEST_CASE("two-layer tanh network gradient") {
    nsbi::Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
      ParamStore store;
      Linear l1(store, "l1", 4, 8, rng);
      Linear l2(store, "l2", 8, 1, rng);
      std::mt19937_64 r2(rep);
      const Var x = constant(random_tensor(Shape{5, 4}, r2));
      const Var y = constant(random_tensor(Shape{5, 1}, r2));
      auto loss = [&] {
        Var d = l2.forward(tanh(l1.forward(x))) - y;
        return mean(d * d);
      };
      std::vector<Var> params = store.params();
      CHECK(testutil::max_grad_error(params, loss) < 1e-4);
    }
  }

  TEST_CASE("backward is deterministic") {
    nsbi::Rng r1(5), r2(5);
    ParamStore s1, s2;
    Linear a(s1, "l", 3, 2, r1), b(s2, "l", 3, 2, r2);
    const Var x = constant(Tensor::matrix(1, 3, {0.1, -0.4, 0.9}));
    backward(sum(tanh(a.forward(x))));
    backward(sum(tanh(b.forward(x))));
    CHECK(s1.params()[0].grad().storage() == s2.params()[0].grad().storage());
  }

  TEST_CASE("adam first step moves by lr against the gradient sign") {
    ParamStore store;
    Var w = store.add("w", Tensor::vector({1.0, -1.0, 0.5}));
    backward(sum(constant(Tensor::vector({3.0, -0.2, 0.0})) * w));
    AdamConfig cfg;
    store.adam_step(cfg);
    CHECK(w.value()[0] == doctest::Approx(1.0 - cfg.lr).epsilon(1e-6));
    CHECK(w.value()[1] == doctest::Approx(-1.0 + cfg.lr).epsilon(1e-6));
    CHECK(w.value()[2] == 0.5);
    CHECK(store.step_count() == 1);
  }

  TEST_CASE("adam refuses non-finite gradients") {
    ParamStore store;
    Var w = store.add("layer.weight", Tensor::vector({0.0}));
    backward(sum(log(w)));
    try {
      store.adam_step({});
      FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("layer.weight") != std::string::npos);
    }
    CHECK(store.step_count() == 0);
  }

  TEST_CASE("adam decreases a quadratic bowl monotonically") {
    ParamStore store;
    Var w = store.add("w", Tensor::vector({0.3, -0.2}));
    double prev = std::hypot(0.3, 0.2);
    bool monotone = true;
    for (int i = 0; i < 200; ++i) {
      store.zero_grad();
      backward(sum(w * w));
      store.adam_step({});
      const double now = std::hypot(w.value()[0], w.value()[1]);
      monotone = monotone && now < prev;
      prev = now;
    }
    CHECK(monotone);
  }
}
