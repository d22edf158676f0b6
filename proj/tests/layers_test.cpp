#include <doctest.h>

#include <cmath>

#include "asl/layers.hpp"
#include "asl/rng.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using asl::ConvParams;
using asl::DenseParams;
using asl::Mode;
using asl::Shape;
using asl::Tensor;

namespace {

ConvParams<double> random_conv(std::size_t cout, std::size_t cin,
                               asl::Rng& rng) {
  return {oracle::random_tensor<double>(Shape{cout, cin, 3, 3}, rng),
          oracle::random_tensor<double>(Shape{cout}, rng)};
}

}  // namespace

TEST_CASE("conv2d delta kernel is an identity") {
  asl::Rng rng(1);
  const auto x = oracle::random_tensor<double>(Shape{1, 1, 5, 5}, rng);
  ConvParams<double> p{Tensor<double>(Shape{1, 1, 3, 3}),
                       Tensor<double>(Shape{1})};
  p.kernels.at(0, 0, 1, 1) = 1.0;  // center tap only
  CHECK(asl::conv2d(x, p) == x);
}

TEST_CASE("conv2d all-ones kernel shows zero padding at the borders") {
  const double c = 0.7;
  Tensor<double> x(Shape{1, 1, 6, 6}, c);
  ConvParams<double> p{Tensor<double>(Shape{1, 1, 3, 3}, 1.0),
                       Tensor<double>(Shape{1})};
  const Tensor<double> y = asl::conv2d(x, p);
  CHECK(y.at(0, 0, 2, 3) == doctest::Approx(9 * c));  // interior
  CHECK(y.at(0, 0, 0, 0) == doctest::Approx(4 * c));  // corner
  CHECK(y.at(0, 0, 5, 5) == doctest::Approx(4 * c));
  CHECK(y.at(0, 0, 0, 3) == doctest::Approx(6 * c));  // edge
}

TEST_CASE("conv2d rejects channel mismatch") {
  asl::Rng rng(2);
  const auto x = oracle::random_tensor<double>(Shape{1, 2, 4, 4}, rng);
  const auto p = random_conv(3, 5, rng);
  CHECK_THROWS_AS(asl::conv2d(x, p), asl::Error);
}

TEST_CASE("conv2d matches the direct quadruple-loop oracle") {
  asl::Rng rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t b = 1 + rng.below(2);
    const std::size_t cin = 1 + rng.below(3);
    const std::size_t cout = 1 + rng.below(4);
    const std::size_t h = 2 + rng.below(7);
    const std::size_t w = 2 + rng.below(7);
    const auto x = oracle::random_tensor<double>(Shape{b, cin, h, w}, rng);
    const auto p = random_conv(cout, cin, rng);
    const auto fast = asl::conv2d(x, p);
    const auto slow = oracle::conv2d_direct(x, p.kernels, p.bias);
    REQUIRE(fast.shape() == slow.shape());
    for (std::size_t i = 0; i < fast.size(); ++i) {
      CHECK(std::abs(fast[i] - slow[i]) < 1e-12);
    }
  }
}

TEST_CASE("conv2d gradients pass finite differences") {
  asl::Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t b = 1 + rng.below(2);
    const std::size_t cin = 1 + rng.below(3);
    const std::size_t cout = 1 + rng.below(3);
    const std::size_t h = 2 + rng.below(5);
    const std::size_t w = 2 + rng.below(5);
    auto x = oracle::random_tensor<double>(Shape{b, cin, h, w}, rng);
    auto p = random_conv(cout, cin, rng);
    const auto upstream =
        oracle::random_tensor<double>(Shape{b, cout, h, w}, rng);

    const auto grads = asl::conv2d_backward(x, p, upstream);
    auto loss = [&] { return gradcheck::weighted_sum(asl::conv2d(x, p), upstream); };

    CHECK(gradcheck::max_rel_error(x, loss, grads.dinput) < 1e-4);
    CHECK(gradcheck::max_rel_error(p.kernels, loss, grads.dkernels) < 1e-4);
    CHECK(gradcheck::max_rel_error(p.bias, loss, grads.dbias) < 1e-4);
  }
}

TEST_CASE("maxpool2d examples and oracle equivalence") {
  Tensor<double> x(Shape{1, 1, 2, 2}, {1, 2, 3, 4});
  const auto pooled = asl::maxpool2d(x, 2, 2);
  CHECK(pooled.output.shape() == Shape{1, 1, 1, 1});
  CHECK(pooled.output[0] == 4.0);
  CHECK(pooled.argmax[0] == 3);

  Tensor<double> constant(Shape{2, 3, 8, 8}, 0.25);
  const auto cpooled = asl::maxpool2d(constant, 4, 4);
  CHECK(cpooled.output.shape() == Shape{2, 3, 2, 2});
  for (std::size_t i = 0; i < cpooled.output.size(); ++i) {
    CHECK(cpooled.output[i] == 0.25);
  }

  asl::Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = oracle::random_tensor<double>(Shape{2, 2, 8, 8}, rng);
    for (std::size_t window : {2u, 4u}) {
      const auto fast = asl::maxpool2d(t, window, window);
      const auto slow = oracle::maxpool_direct(t, window, window);
      CHECK(fast.output == slow);
    }
  }

  CHECK_THROWS_AS(asl::maxpool2d(Tensor<double>(Shape{1, 1, 5, 5}), 2, 2),
                  asl::Error);
}

TEST_CASE("maxpool argmax ties break to the first row-major element") {
  Tensor<double> x(Shape{1, 1, 2, 2}, {7, 7, 7, 7});
  CHECK(asl::maxpool2d(x, 2, 2).argmax[0] == 0);
}

TEST_CASE("maxpool backward conserves gradient mass and passes FD") {
  asl::Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = oracle::random_tensor<double>(Shape{2, 2, 4, 4}, rng);
    const auto upstream =
        oracle::random_tensor<double>(Shape{2, 2, 2, 2}, rng);
    const auto pooled = asl::maxpool2d(x, 2, 2);
    const auto dx = asl::maxpool2d_backward(x.shape(), pooled.argmax, upstream);

    double up_sum = 0;
    double dx_sum = 0;
    for (std::size_t i = 0; i < upstream.size(); ++i) up_sum += upstream[i];
    for (std::size_t i = 0; i < dx.size(); ++i) dx_sum += dx[i];
    CHECK(up_sum == doctest::Approx(dx_sum).epsilon(1e-12));

    auto loss = [&] {
      return gradcheck::weighted_sum(asl::maxpool2d(x, 2, 2).output, upstream);
    };
    CHECK(gradcheck::max_rel_error(x, loss, dx) < 1e-4);
  }
}

TEST_CASE("dense examples") {
  // Identity weights pass the input through.
  Tensor<double> x(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
  DenseParams<double> ident{Tensor<double>(Shape{3, 3}),
                            Tensor<double>(Shape{3})};
  for (std::size_t i = 0; i < 3; ++i) ident.weights.at(i, i) = 1.0;
  CHECK(asl::dense(x, ident) == x);

  // Zero weights leave only the bias.
  DenseParams<double> zero{Tensor<double>(Shape{3, 2}),
                           Tensor<double>(Shape{2}, {0.5, -1.0})};
  const auto y = asl::dense(x, zero);
  CHECK(y.at(0, 0) == 0.5);
  CHECK(y.at(1, 1) == -1.0);

  DenseParams<double> tiny{Tensor<double>(Shape{2, 1}, {1, 1}),
                           Tensor<double>(Shape{1}, {0.5})};
  const auto s = asl::dense(Tensor<double>(Shape{1, 2}, {1, 2}), tiny);
  CHECK(s.at(0, 0) == 3.5);

  CHECK_THROWS_AS(asl::dense(x, tiny), asl::Error);
}

TEST_CASE("dense gradients pass finite differences") {
  asl::Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t b = 1 + rng.below(3);
    const std::size_t fin = 1 + rng.below(8);
    const std::size_t fout = 1 + rng.below(6);
    auto x = oracle::random_tensor<double>(Shape{b, fin}, rng);
    DenseParams<double> p{oracle::random_tensor<double>(Shape{fin, fout}, rng),
                          oracle::random_tensor<double>(Shape{fout}, rng)};
    const auto upstream = oracle::random_tensor<double>(Shape{b, fout}, rng);

    const auto grads = asl::dense_backward(x, p, upstream);
    auto loss = [&] { return gradcheck::weighted_sum(asl::dense(x, p), upstream); };
    CHECK(gradcheck::max_rel_error(x, loss, grads.dinput) < 1e-4);
    CHECK(gradcheck::max_rel_error(p.weights, loss, grads.dweights) < 1e-4);
    CHECK(gradcheck::max_rel_error(p.bias, loss, grads.dbias) < 1e-4);
  }
}

TEST_CASE("relu forward and backward") {
  Tensor<double> x(Shape{3}, {-1, 0, 2});
  CHECK(asl::relu(x) == Tensor<double>(Shape{3}, {0, 0, 2}));

  Tensor<double> pos(Shape{4}, {0.1, 5, 2, 7});
  CHECK(asl::relu(pos) == pos);

  Tensor<double> up(Shape{3}, {10, 10, 10});
  const auto g = asl::relu_backward(Tensor<double>(Shape{3}, {-5, 0, 3}), up);
  CHECK(g == Tensor<double>(Shape{3}, {0, 0, 10}));

  asl::Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto t = oracle::random_tensor<double>(Shape{2, 3, 4, 4}, rng);
    const auto upstream = oracle::random_tensor<double>(t.shape(), rng);
    const auto dx = asl::relu_backward(t, upstream);
    auto loss = [&] { return gradcheck::weighted_sum(asl::relu(t), upstream); };
    CHECK(gradcheck::max_rel_error(t, loss, dx) < 1e-4);
  }
}

TEST_CASE("softmax examples and properties") {
  const auto sym = asl::softmax(Tensor<double>(Shape{1, 2}, {0, 0}));
  CHECK(sym.at(0, 0) == doctest::Approx(0.5));
  CHECK(sym.at(0, 1) == doctest::Approx(0.5));

  const auto logs = asl::softmax(Tensor<double>(
      Shape{1, 3}, {std::log(1.0), std::log(2.0), std::log(3.0)}));
  CHECK(logs.at(0, 0) == doctest::Approx(1.0 / 6));
  CHECK(logs.at(0, 1) == doctest::Approx(2.0 / 6));
  CHECK(logs.at(0, 2) == doctest::Approx(3.0 / 6));

  asl::Rng rng(9);
  const auto x = oracle::random_tensor<double>(Shape{4, 10}, rng);
  const auto p = asl::softmax(x);
  auto shifted = x;
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t k = 0; k < 10; ++k) shifted.at(r, k) += 3.25;
  }
  const auto p2 = asl::softmax(shifted);
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(p[i] == doctest::Approx(p2[i]).epsilon(1e-12));
    CHECK(p[i] > 0.0);
    CHECK(p[i] < 1.0);
  }
  for (std::size_t r = 0; r < 4; ++r) {
    double sum = 0;
    for (std::size_t k = 0; k < 10; ++k) sum += p.at(r, k);
    CHECK(std::abs(sum - 1.0) < 1e-6);
  }

  // Large logits must not overflow thanks to the max subtraction.
  const auto big = asl::softmax(
      Tensor<float>(Shape{1, 3}, {1e4f, -1e4f, 9.999e3f}));
  CHECK(std::isfinite(big.at(0, 0)));
  double sum = big.at(0, 0) + big.at(0, 1) + big.at(0, 2);
  CHECK(std::abs(sum - 1.0) < 1e-6);
}

TEST_CASE("dropout eval and p = 0 are identities") {
  asl::Rng rng(10);
  const auto x = oracle::random_tensor<double>(Shape{5, 7}, rng);
  const auto eval = asl::dropout(x, 0.5, Mode::Eval, std::uint64_t(1));
  CHECK(eval.output == x);
  for (std::size_t i = 0; i < eval.mask.size(); ++i) {
    CHECK(eval.mask[i] == 1.0);
  }
  const auto keep_all = asl::dropout(x, 0.0, Mode::Train, std::uint64_t(1));
  CHECK(keep_all.output == x);

  CHECK_THROWS_AS(asl::dropout(x, 1.0, Mode::Train, std::uint64_t(1)),
                  asl::Error);
}

TEST_CASE("dropout train mode: mask values, exactness, expectation") {
  const std::size_t n = 100000;
  Tensor<double> ones(Shape{n}, 1.0);
  const auto res = asl::dropout(ones, 0.5, Mode::Train, std::uint64_t(42));

  double mean = 0;
  for (std::size_t i = 0; i < n; ++i) {
    CHECK((res.mask[i] == 0.0 || res.mask[i] == 2.0));
    CHECK(res.output[i] == ones[i] * res.mask[i]);
    mean += res.output[i];
  }
  mean /= static_cast<double>(n);
  CHECK(mean > 0.98);
  CHECK(mean < 1.02);

  // Same seed reproduces the mask; backward is mask times upstream.
  const auto res2 = asl::dropout(ones, 0.5, Mode::Train, std::uint64_t(42));
  CHECK(res2.mask == res.mask);
  asl::Rng rng(11);
  const auto upstream = oracle::random_tensor<double>(Shape{n}, rng);
  const auto dx = asl::dropout_backward(res.mask, upstream);
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(dx[i] == upstream[i] * res.mask[i]);
  }
}
