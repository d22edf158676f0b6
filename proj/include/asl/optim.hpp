#pragma once

#include <cmath>
#include <vector>

#include "asl/errors.hpp"
#include "asl/tensor.hpp"

namespace asl {

struct LossValue {
  double mean_loss = 0.0;
  std::size_t batch_size = 0;
};

template <typename T>
struct LossResult {
  LossValue loss;
  Tensor<T> dlogits;  // gradient w.r.t. pre-softmax logits, (p - y) / B
};

// Mean categorical cross-entropy over the batch. The probability inside the
// log is clamped at 1e-12; the gradient uses the fused softmax identity, so
// the clamp never leaks into it.
template <typename T>
LossResult<T> cross_entropy(const Tensor<T>& probs, const Tensor<T>& targets) {
  if (probs.shape().rank() != 2 || probs.shape() != targets.shape()) {
    raise(ErrorCode::Shape, "cross_entropy: probs " + probs.shape().str() +
                                " vs targets " + targets.shape().str());
  }
  const std::size_t b = probs.shape()[0];
  const std::size_t k = probs.shape()[1];

  double total = 0.0;
  for (std::size_t r = 0; r < b; ++r) {
    const T* prow = probs.data() + r * k;
    const T* trow = targets.data() + r * k;
    double row_sum = 0.0;
    int ones = 0;
    std::size_t hot = 0;
    for (std::size_t j = 0; j < k; ++j) {
      row_sum += static_cast<double>(prow[j]);
      if (trow[j] == T(1)) {
        ++ones;
        hot = j;
      } else if (trow[j] != T(0)) {
        raise(ErrorCode::Label,
              "target row " + std::to_string(r) + " is not one-hot");
      }
    }
    if (ones != 1) {
      raise(ErrorCode::Label,
            "target row " + std::to_string(r) + " is not one-hot");
    }
    if (std::abs(row_sum - 1.0) > 1e-5) {
      raise(ErrorCode::Numeric, "probability row " + std::to_string(r) +
                                    " sums to " + std::to_string(row_sum));
    }
    const double p = std::max(static_cast<double>(prow[hot]), 1e-12);
    total -= std::log(p);
  }

  LossResult<T> res{{total / static_cast<double>(b), b}, Tensor<T>(probs.shape())};
  const T inv_b = T(1) / static_cast<T>(b);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    res.dlogits[i] = (probs[i] - targets[i]) * inv_b;
  }
  return res;
}

// Fraction of rows whose predicted class matches the target class; argmax
// ties resolve to the lowest index.
template <typename T>
double accuracy(const Tensor<T>& probs, const Tensor<T>& targets) {
  if (probs.shape().rank() != 2 || probs.shape() != targets.shape()) {
    raise(ErrorCode::Shape, "accuracy: shape mismatch");
  }
  const std::size_t b = probs.shape()[0];
  const std::size_t k = probs.shape()[1];
  auto argmax = [k](const T* row) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (row[j] > row[best]) best = j;
    }
    return best;
  };
  std::size_t correct = 0;
  for (std::size_t r = 0; r < b; ++r) {
    if (argmax(probs.data() + r * k) == argmax(targets.data() + r * k)) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(b);
}

// Decaying accumulators of squared gradients and squared updates, one pair
// per parameter tensor.
template <typename T>
struct AdaDeltaState {
  T rho = T(0.95);
  T epsilon = T(1e-6);
  std::vector<Tensor<T>> acc_grad_sq;
  std::vector<Tensor<T>> acc_update_sq;
};

template <typename T>
AdaDeltaState<T> adadelta_init(const std::vector<Tensor<T>>& params,
                               double rho = 0.95, double epsilon = 1e-6) {
  AdaDeltaState<T> state;
  state.rho = static_cast<T>(rho);
  state.epsilon = static_cast<T>(epsilon);
  state.acc_grad_sq.reserve(params.size());
  state.acc_update_sq.reserve(params.size());
  for (const auto& p : params) {
    state.acc_grad_sq.emplace_back(p.shape());
    state.acc_update_sq.emplace_back(p.shape());
  }
  return state;
}

// Per element:
//   E[g2]  <- rho E[g2] + (1 - rho) g^2
//   dx      = -(sqrt(E[dx2] + eps) / sqrt(E[g2] + eps)) g
//   E[dx2] <- rho E[dx2] + (1 - rho) dx^2
//   x      <- x + dx
template <typename T>
void adadelta_step(std::vector<Tensor<T>>& params,
                   const std::vector<Tensor<T>>& grads,
                   AdaDeltaState<T>& state) {
  if (grads.size() != params.size() ||
      state.acc_grad_sq.size() != params.size()) {
    raise(ErrorCode::Shape, "adadelta_step: parameter/gradient count mismatch");
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (grads[t].shape() != params[t].shape()) {
      raise(ErrorCode::Shape, "adadelta_step: gradient " + std::to_string(t) +
                                  " has shape " + grads[t].shape().str() +
                                  ", parameter is " +
                                  params[t].shape().str());
    }
    bool bad = false;
#pragma omp parallel for schedule(static) reduction(||:bad)
    for (long long i = 0; i < static_cast<long long>(grads[t].size()); ++i) {
      bad = bad || std::isnan(grads[t][static_cast<std::size_t>(i)]);
    }
    if (bad) {
      raise(ErrorCode::Numeric,
            "NaN gradient in parameter " + std::to_string(t));
    }
  }

  const T rho = state.rho;
  const T eps = state.epsilon;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor<T>& x = params[t];
    const Tensor<T>& g = grads[t];
    Tensor<T>& eg = state.acc_grad_sq[t];
    Tensor<T>& ex = state.acc_update_sq[t];
#pragma omp parallel for schedule(static)
    for (long long li = 0; li < static_cast<long long>(x.size()); ++li) {
      const auto i = static_cast<std::size_t>(li);
      eg[i] = rho * eg[i] + (T(1) - rho) * g[i] * g[i];
      const T dx = -(std::sqrt(ex[i] + eps) / std::sqrt(eg[i] + eps)) * g[i];
      ex[i] = rho * ex[i] + (T(1) - rho) * dx * dx;
      x[i] += dx;
    }
  }
}

}  // namespace asl
