#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gam/mlp.hpp"
#include "gam/oracle_loss.hpp"
#include "gam/quadratic.hpp"
#include "gam/rng.hpp"
#include "test_util.hpp"

using namespace gam;
using gam::test::empty_batch;
using gam::test::random_classification_batch;

namespace {

MlpSpec spec_of(std::vector<int> widths, std::uint64_t seed = 1) {
  MlpSpec s;
  s.layer_widths = std::move(widths);
  s.init_seed = seed;
  return s;
}

Batch single_example(std::vector<double> x, int label) {
  Batch b;
  b.inputs = Matrix(1, x.size());
  b.inputs.data = std::move(x);
  b.labels = {label};
  return b;
}

}  // namespace

TEST_CASE("uniform two-class logits cost exactly ln 2") {
  MlpLoss loss(spec_of({1, 2}), Task::kSoftmaxCrossEntropy);
  ParamVector zeros(loss.dimension());
  Batch b = single_example({0.7}, 0);
  CHECK(loss.value(zeros, b) == doctest::Approx(0.69314718055994529).epsilon(1e-15));
  b.labels = {1};
  CHECK(loss.value(zeros, b) == doctest::Approx(0.69314718055994529).epsilon(1e-15));
}

TEST_CASE("a single hot logit costs ln((e+2)/e) exactly") {
  MlpLoss loss(spec_of({1, 3}), Task::kSoftmaxCrossEntropy);
  REQUIRE(loss.dimension() == 6);
  // layout is w1 (3) then b1 (3); zero input isolates the bias
  ParamVector p(loss.dimension());
  p[3] = 1.0;  // bias of class 0
  Batch b = single_example({0.0}, 0);
  CHECK(loss.value(p, b) == doctest::Approx(0.55144471393205108).epsilon(1e-15));
}

TEST_CASE("cross-entropy is nonnegative and zero only in the limit") {
  MlpLoss loss(spec_of({3, 6, 4}), Task::kSoftmaxCrossEntropy);
  Rng rng(42);
  for (int trial = 0; trial < 30; ++trial) {
    ParamVector p = gam::test::random_point(rng, loss.dimension());
    Batch b = random_classification_batch(rng, 5, 3, 4);
    double v = loss.value(p, b);
    CHECK(v >= 0.0);
    CHECK(std::isfinite(v));
  }
}

TEST_CASE("bias gradients of a softmax layer sum to zero per example") {
  MlpLoss loss(spec_of({2, 5, 3}), Task::kSoftmaxCrossEntropy);
  Rng rng(7);
  ParamVector p = gam::test::random_point(rng, loss.dimension());
  Batch b = random_classification_batch(rng, 8, 2, 3);
  ParamVector g(loss.dimension());
  loss.value_and_gradient(p, b, g);
  // output-layer biases: softmax minus one-hot averaged over the batch,
  // which sums to zero across classes
  const Segment* b2 = loss.layout()->find("b2");
  REQUIRE(b2 != nullptr);
  double s = 0.0;
  for (std::size_t i = b2->offset; i < b2->offset + b2->size; ++i) s += g[i];
  CHECK(std::abs(s) < 1e-14);
}

TEST_CASE("mse loss vanishes when the network reproduces the targets") {
  MlpLoss loss(spec_of({2, 2}), Task::kMse);
  ParamVector zeros(loss.dimension());
  Batch b;
  b.inputs = Matrix(3, 2);
  b.targets = Matrix(3, 2);  // all zeros, matching the zero network
  CHECK(loss.value(zeros, b) == 0.0);
  ParamVector g(loss.dimension());
  CHECK(loss.value_and_gradient(zeros, b, g) == 0.0);
  for (std::size_t i = 0; i < g.dim(); ++i) CHECK(g[i] == 0.0);
}

TEST_CASE("parameter count and layout for a (2,3,2) network") {
  MlpSpec s = spec_of({2, 3, 2});
  CHECK(mlp_dimension(s) == 17);
  auto layout = mlp_layout(s);
  REQUIRE(layout->segments().size() == 4);
  const auto& segs = layout->segments();
  CHECK(segs[0].name == "w1");
  CHECK(segs[0].size == 6);
  CHECK_FALSE(segs[0].is_bias);
  CHECK(segs[1].name == "b1");
  CHECK(segs[1].size == 3);
  CHECK(segs[1].is_bias);
  CHECK(segs[2].name == "w2");
  CHECK(segs[2].size == 6);
  CHECK(segs[3].name == "b2");
  CHECK(segs[3].size == 2);
  CHECK(segs[3].is_bias);
  CHECK(layout->dim() == 17);
}

TEST_CASE("initialization is deterministic with zero biases") {
  MlpSpec s = spec_of({2, 8, 2}, 77);
  ParamVector a = init_params(s);
  ParamVector b = init_params(s);
  REQUIRE(a.dim() == b.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) CHECK(a[i] == b[i]);

  s.init_seed = 78;
  ParamVector c = init_params(s);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.dim(); ++i)
    if (a[i] != c[i]) any_diff = true;
  CHECK(any_diff);

  for (const auto& seg : a.layout()->segments()) {
    if (!seg.is_bias) continue;
    for (std::size_t i = seg.offset; i < seg.offset + seg.size; ++i)
      CHECK(a[i] == 0.0);
  }
  // fan-in bound on the weights
  const double s1 = 1.0 / std::sqrt(2.0);
  const Segment* w1 = a.layout()->find("w1");
  for (std::size_t i = w1->offset; i < w1->offset + w1->size; ++i) {
    CHECK(std::abs(a[i]) <= s1);
  }
}

TEST_CASE("prediction ties resolve to the lowest class index") {
  MlpLoss loss(spec_of({2, 3}), Task::kSoftmaxCrossEntropy);
  ParamVector zeros(loss.dimension());
  Matrix inputs(2, 2);
  inputs.at(0, 0) = 0.3;
  inputs.at(1, 1) = -0.9;
  auto labels = loss.predict_labels(zeros, inputs);
  REQUIRE(labels.size() == 2);
  CHECK(labels[0] == 0);
  CHECK(labels[1] == 0);
  CHECK(accuracy(loss, zeros, inputs, {0, 0}) == 1.0);
  CHECK(accuracy(loss, zeros, inputs, {0, 1}) == 0.5);
  CHECK(accuracy(loss, zeros, inputs, {1, 2}) == 0.0);
}

TEST_CASE("predict agrees with the tape on the forward value") {
  MlpLoss loss(spec_of({2, 4, 3}, 5), Task::kSoftmaxCrossEntropy);
  Rng rng(11);
  ParamVector p = gam::test::random_point(rng, loss.dimension(), 0.5);
  Batch b = random_classification_batch(rng, 4, 2, 3);
  Matrix out = loss.predict(p, b.inputs);
  REQUIRE(out.rows == 4);
  REQUIRE(out.cols == 3);
  // cross-entropy of the predicted logits, computed here from predict,
  // must match the tape's batch loss
  double total = 0.0;
  for (std::size_t r = 0; r < out.rows; ++r) {
    double m = out.at(r, 0);
    for (std::size_t c = 1; c < out.cols; ++c) m = std::max(m, out.at(r, c));
    double se = 0.0;
    for (std::size_t c = 0; c < out.cols; ++c) se += std::exp(out.at(r, c) - m);
    total += std::log(se) + m - out.at(r, static_cast<std::size_t>(b.labels[r]));
  }
  CHECK(loss.value(p, b) == doctest::Approx(total / 4.0).epsilon(1e-14));
}

TEST_CASE("relu activation is supported end to end") {
  MlpSpec s = spec_of({2, 6, 2}, 9);
  s.activation = Activation::kRelu;
  MlpLoss loss(s, Task::kSoftmaxCrossEntropy);
  Rng rng(13);
  ParamVector p = gam::test::random_point(rng, loss.dimension(), 0.7);
  Batch b = random_classification_batch(rng, 6, 2, 2);
  ParamVector g(loss.dimension());
  double v = loss.value_and_gradient(p, b, g);
  CHECK(std::isfinite(v));
  CHECK(v >= 0.0);
  bool any_nonzero = false;
  for (std::size_t i = 0; i < g.dim(); ++i)
    if (g[i] != 0.0) any_nonzero = true;
  CHECK(any_nonzero);
}

TEST_CASE("mlp rejects malformed specs and batches") {
  CHECK_THROWS_AS(MlpLoss(spec_of({2}), Task::kSoftmaxCrossEntropy),
                  std::invalid_argument);
  CHECK_THROWS_AS(MlpLoss(spec_of({2, 0, 2}), Task::kSoftmaxCrossEntropy),
                  std::invalid_argument);
  MlpLoss loss(spec_of({2, 3}), Task::kSoftmaxCrossEntropy);
  ParamVector p(loss.dimension());
  Batch wrong_width = single_example({1.0, 2.0, 3.0}, 0);
  CHECK_THROWS_AS(loss.value(p, wrong_width), std::invalid_argument);
  Batch no_labels;
  no_labels.inputs = Matrix(2, 2);
  CHECK_THROWS_AS(loss.value(p, no_labels), std::invalid_argument);
  Batch bad_label = single_example({1.0, 2.0}, 3);
  CHECK_THROWS_AS(loss.value(p, bad_label), std::invalid_argument);
}

TEST_CASE("a plain oracle passes values and gradients through bitwise") {
  QuadraticLoss q({{2.0, 1.0, 0.5}, {}});
  OracleLoss oracle(q, {});
  Batch b = empty_batch();
  Rng rng(3);
  ParamVector p = gam::test::random_point(rng, 3);
  CHECK(oracle.value(p, b) == q.value(p, b));
  ParamVector g1(3), g2(3);
  CHECK(oracle.value_and_gradient(p, b, g1) == q.value_and_gradient(p, b, g2));
  for (std::size_t i = 0; i < 3; ++i) CHECK(g1[i] == g2[i]);
  ParamVector h1(3), h2(3), gg1(3), gg2(3);
  ParamVector dir = gam::test::random_point(rng, 3);
  oracle.hvp_with_gradient(p, dir, b, h1, gg1);
  q.hvp_with_gradient(p, dir, b, h2, gg2);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(h1[i] == h2[i]);
    CHECK(gg1[i] == gg2[i]);
  }
}

TEST_CASE("weight decay shifts the quadratic gradient by wd * theta") {
  QuadraticLoss q({{2.0, 1.0}, {}});
  OracleLoss oracle(q, {.weight_decay = 0.1});
  Batch b = empty_batch();
  ParamVector p(std::vector<double>{1.0, 0.0});
  ParamVector g(2);
  double v = oracle.value_and_gradient(p, b, g);
  CHECK(g[0] == doctest::Approx(2.1).epsilon(1e-15));
  CHECK(g[1] == 0.0);
  CHECK(v == doctest::Approx(1.0 + 0.05).epsilon(1e-15));
  // hvp picks up the same diagonal shift
  ParamVector dir(std::vector<double>{1.0, 1.0});
  ParamVector h(2), gg(2);
  oracle.hvp_with_gradient(p, dir, b, h, gg);
  CHECK(h[0] == doctest::Approx(2.1).epsilon(1e-15));
  CHECK(h[1] == doctest::Approx(1.1).epsilon(1e-15));
}

TEST_CASE("weight decay skips bias segments") {
  MlpLoss base(spec_of({1, 2}, 31), Task::kSoftmaxCrossEntropy);
  OracleLoss oracle(base, {.weight_decay = 0.5});
  Batch b = single_example({1.0}, 0);
  Rng rng(8);
  ParamVector p = gam::test::random_point(rng, base.dimension());
  ParamVector ge(base.dimension()), go(base.dimension());
  double ve = base.value_and_gradient(p, b, ge);
  double vo = oracle.value_and_gradient(p, b, go);
  double wsq = 0.0;
  for (const auto& seg : base.layout()->segments()) {
    for (std::size_t i = seg.offset; i < seg.offset + seg.size; ++i) {
      if (seg.is_bias) {
        CHECK(go[i] == ge[i]);
      } else {
        CHECK(go[i] == ge[i] + 0.5 * p[i]);
        wsq += p[i] * p[i];
      }
    }
  }
  CHECK(vo == doctest::Approx(ve + 0.25 * wsq).epsilon(1e-15));
}

TEST_CASE("a sam-composed oracle evaluates at the ascended point") {
  QuadraticLoss q({{2.0, 1.0}, {}});
  OracleLoss oracle(q, {.sam_rho = 0.1, .xi = 0.0});
  Batch b = empty_batch();
  ParamVector p(std::vector<double>{1.0, 0.0});
  ParamVector g(2);
  double v = oracle.value_and_gradient(p, b, g);
  // g_base = (2,0), shifted point (1.1, 0), gradient there (2.2, 0)
  CHECK(g[0] == doctest::Approx(2.2).epsilon(1e-15));
  CHECK(g[1] == 0.0);
  CHECK(v == doctest::Approx(0.5 * 2.0 * 1.1 * 1.1).epsilon(1e-15));
  CHECK(oracle.value(p, b) == doctest::Approx(1.21).epsilon(1e-15));
}

TEST_CASE("curvature queries on a sam-composed oracle are rejected") {
  QuadraticLoss q({{2.0, 1.0}, {}});
  OracleLoss oracle(q, {.sam_rho = 0.1});
  Batch b = empty_batch();
  ParamVector p(std::vector<double>{1.0, 0.0});
  ParamVector dir(std::vector<double>{1.0, 0.0});
  ParamVector h(2), g(2);
  CHECK_THROWS_AS(oracle.hvp_with_gradient(p, dir, b, h, g), std::logic_error);
}

TEST_CASE("sam oracle at a stationary point stays put") {
  QuadraticLoss q({{2.0, 1.0}, {}});
  OracleLoss oracle(q, {.sam_rho = 0.1, .xi = 0.0});
  Batch b = empty_batch();
  ParamVector p(2);
  ParamVector g(2);
  // zero gradient, zero xi: the shift denominator is zero and the point is
  // left untouched rather than dividing by zero
  CHECK(oracle.value_and_gradient(p, b, g) == 0.0);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 0.0);
}

TEST_CASE("oracle spec validation") {
  QuadraticLoss q({{1.0}, {}});
  CHECK_THROWS_AS(OracleLoss(q, {.weight_decay = -0.1}), std::invalid_argument);
  CHECK_THROWS_AS(OracleLoss(q, {.sam_rho = -0.5}), std::invalid_argument);
  CHECK_THROWS_AS(OracleLoss(q, {.xi = -1e-12}), std::invalid_argument);
}

TEST_CASE("dense quadratic matches its closed forms") {
  Matrix a(2, 2);
  a.at(0, 0) = 3.0;
  a.at(0, 1) = 1.0;
  a.at(1, 0) = 1.0;
  a.at(1, 1) = 2.0;
  DenseQuadraticLoss dq(a, {0.0, 0.0});
  Batch b = empty_batch();
  ParamVector p(std::vector<double>{1.0, -1.0});
  // 0.5 * x'Ax = 0.5 * (3 - 1 - 1 + 2) = 1.5
  CHECK(dq.value(p, b) == doctest::Approx(1.5).epsilon(1e-15));
  ParamVector g(2);
  dq.value_and_gradient(p, b, g);
  CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-15));   // Ax = (2, -1)
  CHECK(g[1] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(dq.exact_trace() == doctest::Approx(5.0).epsilon(1e-15));
}
