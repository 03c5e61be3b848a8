#include <doctest.h>

#include <cmath>
#include <vector>

#include "maner/adam.hpp"

using namespace maner;

TEST_SUITE("adam") {

TEST_CASE("zero gradient from fresh state leaves params unchanged") {
  Array<double> p(Shape(size_t{3}), {1.0, -2.0, 0.5});
  const std::vector<double> before = p.data;
  Adam<double> adam(AdamConfig<double>{0.1, 0.9, 0.999, 1e-8});
  const std::vector<double> zero(3, 0.0);
  adam.step(p, zero);
  CHECK(p.data == before);
  CHECK(adam.step_count() == 1);
}

TEST_CASE("first step with constant gradient moves each coordinate by about lr") {
  const double lr = 0.01;
  Array<double> p(Shape(size_t{4}), {0.0, 1.0, -1.0, 3.0});
  const std::vector<double> before = p.data;
  const std::vector<double> grad = {0.5, -0.25, 2.0, 1e-3};
  Adam<double> adam(AdamConfig<double>{lr, 0.9, 0.999, 1e-8});
  adam.step(p, grad);
  for (size_t i = 0; i < 4; ++i) {
    const double g = grad[i];
    const double expect = -lr * g / (std::abs(g) + 1e-8);
    CHECK(p.data[i] - before[i] == doctest::Approx(expect).epsilon(1e-12));
    CHECK(std::abs(p.data[i] - before[i]) == doctest::Approx(lr).epsilon(1e-4));
  }
}

TEST_CASE("two steps reproduce the hand-evaluated recurrences") {
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Array<double> p(Shape(size_t{2}), {0.3, -0.7});
  const std::vector<double> g1 = {0.2, -0.4};
  const std::vector<double> g2 = {-0.1, 0.3};

  // scripted reference: evaluate the recurrences directly
  std::vector<double> x = p.data, m(2, 0.0), v(2, 0.0);
  for (int t = 1; t <= 2; ++t) {
    const std::vector<double>& g = t == 1 ? g1 : g2;
    for (size_t i = 0; i < 2; ++i) {
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      const double mhat = m[i] / (1 - std::pow(b1, t));
      const double vhat = v[i] / (1 - std::pow(b2, t));
      x[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }

  Adam<double> adam(AdamConfig<double>{lr, b1, b2, eps});
  adam.step(p, g1);
  adam.step(p, g2);
  CHECK(adam.step_count() == 2);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(p.data[i] == doctest::Approx(x[i]).epsilon(1e-15));
  }
}

TEST_CASE("shape mismatch is rejected") {
  Array<double> p(Shape(size_t{3}));
  Adam<double> adam(AdamConfig<double>{0.1, 0.9, 0.999, 1e-8});
  const std::vector<double> grad(2, 0.0);
  CHECK_THROWS_AS(adam.step(p, grad), DimensionError);
}

TEST_CASE("accumulator shapes track their parameters") {
  Array<float> a(Shape(2, 2));
  Array<float> b(Shape(size_t{5}));
  std::vector<Array<float>*> params = {&a, &b};
  std::vector<float> ga(4, 0.1f), gb(5, -0.2f);
  std::vector<std::span<const float>> grads = {ga, gb};
  Adam<float> adam(AdamConfig<float>{0.01f, 0.9f, 0.999f, 1e-8f});
  adam.step(std::span<Array<float>* const>(params.data(), params.size()),
            std::span<const std::span<const float>>(grads.data(), grads.size()));
  CHECK(adam.step_count() == 1);
  // changing the parameter count afterwards is an error
  std::vector<Array<float>*> fewer = {&a};
  std::vector<std::span<const float>> fewer_grads = {ga};
  CHECK_THROWS_AS(adam.step(std::span<Array<float>* const>(fewer.data(), fewer.size()),
                            std::span<const std::span<const float>>(fewer_grads.data(),
                                                                    fewer_grads.size())),
                  DimensionError);
}

}  // TEST_SUITE
