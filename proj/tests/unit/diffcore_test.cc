// tests/unit/diffcore_test.cc

// Copyright 2026  The sdadapt Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "doctest.h"
#include "sdadapt/base/error.h"
#include "sdadapt/base/random.h"
#include "sdadapt/diffcore/array.h"
#include "sdadapt/diffcore/gradcheck.h"
#include "sdadapt/diffcore/ops.h"

using namespace sdadapt;

namespace {

DiffArray RandomArray(Shape shape, Rng& rng, double scale = 1.0, bool grad = true) {
  std::vector<double> v(ShapeSize(shape));
  for (double& x : v) x = rng.Normal(0.0, scale);
  return DiffArray::FromData(std::move(shape), std::move(v), grad);
}

// Weighted sum so every output entry contributes a distinct gradient.
DiffArray Probe(const DiffArray& y, const DiffArray& weights) {
  return Sum(Hadamard(y, weights));
}

void ExpectGradOk(const std::function<DiffArray()>& fn, const std::vector<DiffArray>& params,
                  double tol = 1e-4) {
  GradCheckReport r = GradCheck(fn, params);
  CHECK_MESSAGE(r.max_rel_err < tol, "worst param " << r.worst_param << " entry " << r.worst_entry
                                                    << " analytic " << r.analytic << " numeric "
                                                    << r.numeric);
}

const std::vector<std::pair<std::size_t, std::size_t>> kShapes = {{1, 1}, {3, 4}, {5, 2}, {2, 7}};

}  // namespace

TEST_CASE("matmul examples") {
  auto eye = DiffArray::FromData({2, 2}, {1, 0, 0, 1});
  auto m = DiffArray::FromData({2, 2}, {1, 2, 3, 4});
  auto p = MatMul(eye, m);
  CHECK(std::vector<double>(p.data().begin(), p.data().end()) == std::vector<double>{1, 2, 3, 4});

  auto row = DiffArray::FromData({1, 2}, {1, 2});
  auto col = DiffArray::FromData({2, 1}, {3, 4});
  CHECK(MatMul(row, col).item() == 11.0);

  CHECK_THROWS_AS(MatMul(row, row), DimensionError);
}

TEST_CASE("matmul gradient of sum(a·b) matches finite differences") {
  Rng rng(7);
  auto a = RandomArray({3, 4}, rng);
  auto b = RandomArray({4, 2}, rng);
  GradCheckOptions opt;
  opt.eps = 1e-5;
  auto r = GradCheck([&] { return Sum(MatMul(a, b)); }, {a}, opt);
  CHECK(r.max_rel_err < 1e-6);
}

TEST_CASE("sigmoid examples") {
  CHECK(Sigmoid(DiffArray::Scalar(0.0)).item() == 0.5);
  double s50 = Sigmoid(DiffArray::Scalar(50.0)).item();
  // 1 − 1e-20 is not representable in float64; the saturated value rounds to
  // exactly 1 and the complementary tail σ(−50) = 1 − σ(50) is below 1e-20.
  CHECK(s50 == 1.0);
  CHECK(Sigmoid(DiffArray::Scalar(-50.0)).item() < 1e-20);
  auto x = DiffArray::Scalar(1.0, true);
  auto r = GradCheck([&] { return Sigmoid(x); }, {x});
  CHECK(std::abs(r.analytic - r.numeric) < 1e-8);
}

TEST_CASE("gelu examples") {
  CHECK(Gelu(DiffArray::Scalar(0.0)).item() == 0.0);
  CHECK(std::abs(Gelu(DiffArray::Scalar(-40.0)).item()) < 1e-300);
  CHECK(Gelu(DiffArray::Scalar(40.0)).item() == doctest::Approx(40.0).epsilon(1e-15));
  // 40-digit reference: 1·Φ(1) = 0.8413447460685429485852...
  CHECK(std::abs(Gelu(DiffArray::Scalar(1.0)).item() - 0.84134474606854294859) < 1e-15);
}

TEST_CASE("layernorm examples") {
  auto ones = DiffArray::Filled({3}, 1.0);
  auto zeros = DiffArray::Zeros({3});
  auto y = LayerNorm(DiffArray::Zeros({2, 3}), ones, zeros, 1e-5);
  for (double v : y.data()) CHECK(v == 0.0);

  auto y2 = LayerNorm(DiffArray::FromData({1, 2}, {1, 3}), DiffArray::Filled({2}, 1.0),
                      DiffArray::Zeros({2}), 1e-14);
  CHECK(y2.at(0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(y2.at(1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(LayerNorm(DiffArray::Zeros({2, 3}), ones, zeros, 0.0), ParameterError);
}

TEST_CASE("layernorm gradient w.r.t. x, gamma, beta") {
  Rng rng(11);
  for (auto [r, c] : kShapes) {
    if (c < 2) continue;
    auto x = RandomArray({r, c}, rng);
    auto gamma = RandomArray({c}, rng);
    auto beta = RandomArray({c}, rng);
    auto w = RandomArray({r, c}, rng, 1.0, false);
    auto r2 = GradCheck([&] { return Probe(LayerNorm(x, gamma, beta, 1e-5), w); }, {x, gamma, beta});
    CHECK(r2.max_rel_err < 1e-5);
  }
}

TEST_CASE("every op passes gradient check on several shapes") {
  Rng rng(3);
  for (auto [r, c] : kShapes) {
    CAPTURE(r);
    CAPTURE(c);
    auto a = RandomArray({r, c}, rng);
    auto b = RandomArray({r, c}, rng);
    auto v = RandomArray({c}, rng);
    auto w = RandomArray({r, c}, rng, 1.0, false);
    auto wt = RandomArray({c, r}, rng, 1.0, false);
    auto k = RandomArray({c, 3}, rng);
    auto kn = RandomArray({3, c}, rng);
    auto w3 = RandomArray({r, 3}, rng, 1.0, false);
    ExpectGradOk([&] { return Probe(Add(a, b), w); }, {a, b});
    ExpectGradOk([&] { return Probe(Sub(a, b), w); }, {a, b});
    ExpectGradOk([&] { return Probe(Hadamard(a, b), w); }, {a, b});
    ExpectGradOk([&] { return Probe(Scale(a, -1.7), w); }, {a});
    ExpectGradOk([&] { return Probe(AddRow(a, v), w); }, {a, v});
    ExpectGradOk([&] { return Probe(MulRow(a, v), w); }, {a, v});
    ExpectGradOk([&] { return Probe(Sigmoid(a), w); }, {a});
    ExpectGradOk([&] { return Probe(Gelu(a), w); }, {a});
    ExpectGradOk([&] { return Probe(LogSoftmax(a), w); }, {a});
    ExpectGradOk([&] { return Probe(Softmax(a), w); }, {a});
    ExpectGradOk([&] { return Probe(Transpose(a), wt); }, {a});
    ExpectGradOk([&] { return Probe(MatMul(a, k), w3); }, {a, k});
    ExpectGradOk([&] { return Probe(MatMulNT(a, kn), w3); }, {a, kn});
    ExpectGradOk([&] { return Mean(Hadamard(a, a)); }, {a});
    ExpectGradOk([&] { return AddN({Sum(a), Sum(Hadamard(b, b))}); }, {a, b});
    if (c >= 2) {
      ExpectGradOk([&] { return Probe(ConcatCols({SliceCols(a, 1, c - 1), SliceCols(b, 0, 1)}), w); },
                   {a, b});
    }
  }
}

TEST_CASE("conv1d length formula and gradient") {
  CHECK(Conv1dOutputLength(5, 3, 2) == 2);
  Rng rng(5);
  auto x = RandomArray({5, 1}, rng);
  auto kern = RandomArray({4, 3, 1}, rng);
  auto bias = RandomArray({4}, rng);
  auto y = Conv1d(x, kern, bias, 2);
  CHECK(y.dim(0) == 2);
  CHECK(y.dim(1) == 4);

  for (auto [t, cin, k, s] : std::vector<std::tuple<int, int, int, int>>{
           {5, 1, 3, 2}, {9, 2, 4, 1}, {12, 3, 3, 3}}) {
    auto xx = RandomArray({std::size_t(t), std::size_t(cin)}, rng);
    auto kk = RandomArray({2, std::size_t(k), std::size_t(cin)}, rng);
    auto bb = RandomArray({2}, rng);
    const std::size_t tout = Conv1dOutputLength(t, k, s);
    auto w = RandomArray({tout, 2}, rng, 1.0, false);
    ExpectGradOk([&] { return Probe(Conv1d(xx, kk, bb, s), w); }, {xx, kk, bb});
  }
  CHECK_THROWS_AS(Conv1d(RandomArray({2, 1}, rng), kern, bias, 1), InputError);
}

TEST_CASE("dropout contract") {
  Rng rng(1);
  auto x = RandomArray({4, 5}, rng);
  Rng r1(42);
  auto same = Dropout(x, 0.5, r1, false);
  CHECK(same.node() == x.node());

  Rng ra(9), rb(9);
  auto da = Dropout(x, 0.3, ra, true);
  auto db = Dropout(x, 0.3, rb, true);
  CHECK(std::equal(da.data().begin(), da.data().end(), db.data().begin()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK((da.at(i) == 0.0 || std::abs(da.at(i) - x.at(i) / 0.7) < 1e-15));
  }
  CHECK_THROWS_AS(Dropout(x, 1.0, r1, true), ParameterError);
  CHECK_THROWS_AS(Dropout(x, -0.1, r1, false), ParameterError);
}

TEST_CASE("backward requires a scalar root and is deterministic") {
  Rng rng(2);
  auto a = RandomArray({3, 3}, rng);
  auto b = RandomArray({3, 3}, rng);
  CHECK_THROWS_AS(MatMul(a, b).Backward(), UsageError);

  auto run = [&] {
    a.zero_grad();
    b.zero_grad();
    auto loss = Sum(LogSoftmax(Gelu(MatMul(a, LayerNorm(b, DiffArray::Filled({3}, 1.0),
                                                        DiffArray::Zeros({3}), 1e-5)))));
    ComputeTape tape(loss);
    CHECK(tape.IsTopologicallyOrdered());
    loss.Backward();
    return std::vector<double>(a.grad().begin(), a.grad().end());
  };
  auto g1 = run();
  auto g2 = run();
  CHECK(g1 == g2);
}

TEST_CASE("gradient accumulates once per use") {
  auto x = DiffArray::FromData({2}, {1.0, 2.0}, true);
  auto loss = Sum(Add(x, x));
  loss.Backward();
  CHECK(x.grad()[0] == 2.0);
  CHECK(x.grad()[1] == 2.0);
}

TEST_CASE("no NaN/Inf for inputs bounded by 1e3") {
  std::vector<double> v;
  for (int i = -10; i <= 10; ++i) v.push_back(100.0 * i);
  auto x = DiffArray::FromData({3, 7}, v, true);
  auto loss = AddN({Sum(Sigmoid(x)), Sum(Gelu(x)), Sum(LogSoftmax(x)), Sum(Softmax(x)),
                    Sum(LayerNorm(x, DiffArray::Filled({7}, 1.0), DiffArray::Zeros({7}), 1e-5))});
  CHECK_NOTHROW(loss.Backward());
  for (double g : x.grad()) CHECK(std::isfinite(g));
}

TEST_CASE("non-finite leaf data is rejected") {
  CHECK_THROWS_AS(DiffArray::FromData({1}, {std::numeric_limits<double>::quiet_NaN()}),
                  NumericError);
  CHECK_THROWS_AS(DiffArray::FromData({2}, {1.0}), DimensionError);
}
