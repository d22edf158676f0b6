#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "asl/errors.hpp"
#include "asl/layers.hpp"
#include "asl/rng.hpp"
#include "asl/tensor.hpp"

namespace asl {

enum class LayerKind { Conv, Relu, MaxPool, Flatten, Dense, Dropout, Softmax };

struct LayerDesc {
  LayerKind kind = LayerKind::Relu;
  std::size_t units = 0;   // conv filters / dense width
  std::size_t window = 0;  // maxpool
  std::size_t stride = 0;
  double drop_p = 0.0;
};

// Canonical textual form, used by the checkpoint manifest.
std::string layer_signature(const LayerDesc& d);

struct ArchitectureSpec {
  std::string name;
  std::vector<LayerDesc> layers;
};

// The three networks. All convs are 3x3 stride 1 with ReLU; dropout follows
// every hidden dense layer; the final dense feeds softmax directly.
ArchitectureSpec make_architecture(const std::string& name,
                                   double dropout_p = 0.5);

// Activation shape flowing between layers: {C, H, W} feature map or a flat
// {F} vector, batch dimension excluded.
struct ActShape {
  std::vector<std::size_t> dims;

  bool is_map() const { return dims.size() == 3; }

  std::size_t flat() const {
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    return n;
  }

  bool operator==(const ActShape&) const = default;
};

// Input shape of every layer plus the final output; layers.size()+1 entries.
std::vector<ActShape> resolve_shapes(const ArchitectureSpec& spec,
                                     const ActShape& input);

template <typename T>
struct Model {
  ArchitectureSpec spec;
  std::vector<ActShape> shapes;
  std::vector<Tensor<T>> params;  // conv: kernels, bias; dense: weights, bias
  std::vector<int> first_param;   // per layer; -1 for parameterless layers
  bool initialized = false;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params) n += p.size();
    return n;
  }
};

namespace detail {

template <typename T>
void allocate_parameters(Model<T>& model) {
  model.first_param.assign(model.spec.layers.size(), -1);
  for (std::size_t i = 0; i < model.spec.layers.size(); ++i) {
    const LayerDesc& d = model.spec.layers[i];
    const ActShape& in = model.shapes[i];
    if (d.kind == LayerKind::Conv) {
      model.first_param[i] = static_cast<int>(model.params.size());
      model.params.emplace_back(
          Shape{d.units, in.dims[0], std::size_t(3), std::size_t(3)});
      model.params.emplace_back(Shape{d.units});
    } else if (d.kind == LayerKind::Dense) {
      model.first_param[i] = static_cast<int>(model.params.size());
      model.params.emplace_back(Shape{in.dims[0], d.units});
      model.params.emplace_back(Shape{d.units});
    }
  }
}

}  // namespace detail

// Shapes resolved for the 1x64x64 input; parameters allocated but all zero
// until init_parameters runs.
template <typename T>
Model<T> build_architecture(const std::string& name, double dropout_p = 0.5) {
  Model<T> model;
  model.spec = make_architecture(name, dropout_p);
  model.shapes = resolve_shapes(model.spec, ActShape{{1, 64, 64}});
  detail::allocate_parameters(model);
  return model;
}

// Builds a model from an explicit layer list; used by tests with shrunken
// geometries.
template <typename T>
Model<T> build_custom(ArchitectureSpec spec, const ActShape& input) {
  Model<T> model;
  model.spec = std::move(spec);
  model.shapes = resolve_shapes(model.spec, input);
  detail::allocate_parameters(model);
  return model;
}

// Glorot-uniform weights, U(+-sqrt(6/(fan_in+fan_out))), zero biases.
// Conv fans count the 3x3 receptive field. Deterministic per seed.
template <typename T>
void init_parameters(Model<T>& model, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = 0; i < model.spec.layers.size(); ++i) {
    const int p = model.first_param[i];
    if (p < 0) continue;
    Tensor<T>& w = model.params[static_cast<std::size_t>(p)];
    Tensor<T>& b = model.params[static_cast<std::size_t>(p) + 1];
    double fan_in = 0;
    double fan_out = 0;
    if (model.spec.layers[i].kind == LayerKind::Conv) {
      fan_in = static_cast<double>(w.shape()[1] * 9);
      fan_out = static_cast<double>(w.shape()[0] * 9);
    } else {
      fan_in = static_cast<double>(w.shape()[0]);
      fan_out = static_cast<double>(w.shape()[1]);
    }
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t j = 0; j < w.size(); ++j) {
      w[j] = static_cast<T>(rng.uniform(-bound, bound));
    }
    for (std::size_t j = 0; j < b.size(); ++j) b[j] = T(0);
  }
  model.initialized = true;
}

template <typename T>
struct ForwardCache {
  Mode mode = Mode::Eval;
  std::vector<Tensor<T>> inputs;  // input tensor of each layer
  std::vector<std::vector<std::size_t>> pool_argmax;
  std::vector<Tensor<T>> dropout_masks;
};

// Runs the layer pipeline; returns class probabilities (B, 10). Dropout is
// active only in train mode and draws its masks sequentially from `seed`.
// When `cache` is given, everything the backward pass needs is recorded.
template <typename T>
Tensor<T> forward(const Model<T>& model, const Tensor<T>& batch, Mode mode,
                  std::uint64_t seed = 0, ForwardCache<T>* cache = nullptr) {
  if (!model.initialized) {
    raise(ErrorCode::Parameter, "model parameters are not initialized");
  }
  const ActShape& in0 = model.shapes.front();
  if (batch.shape().rank() != 4 || batch.shape()[1] != in0.dims[0] ||
      batch.shape()[2] != in0.dims[1] || batch.shape()[3] != in0.dims[2]) {
    raise(ErrorCode::Shape,
          "forward: batch shape " + batch.shape().str() + " does not match " +
              model.spec.name + " input");
  }
  const std::size_t b = batch.shape()[0];
  const std::size_t n_layers = model.spec.layers.size();
  if (cache) {
    cache->mode = mode;
    cache->inputs.assign(n_layers, Tensor<T>());
    cache->pool_argmax.assign(n_layers, {});
    cache->dropout_masks.assign(n_layers, Tensor<T>());
  }

  Rng drop_rng(seed);
  Tensor<T> x = batch;
  for (std::size_t i = 0; i < n_layers; ++i) {
    const LayerDesc& d = model.spec.layers[i];
    if (cache) cache->inputs[i] = x;
    switch (d.kind) {
      case LayerKind::Conv: {
        const auto p = static_cast<std::size_t>(model.first_param[i]);
        x = conv2d(x, ConvParams<T>{model.params[p], model.params[p + 1]});
        break;
      }
      case LayerKind::Relu:
        x = relu(x);
        break;
      case LayerKind::MaxPool: {
        auto res = maxpool2d(x, d.window, d.stride);
        if (cache) cache->pool_argmax[i] = std::move(res.argmax);
        x = std::move(res.output);
        break;
      }
      case LayerKind::Flatten:
        x = reshape(x, Shape{b, x.size() / b});
        break;
      case LayerKind::Dense: {
        const auto p = static_cast<std::size_t>(model.first_param[i]);
        x = dense(x, DenseParams<T>{model.params[p], model.params[p + 1]});
        break;
      }
      case LayerKind::Dropout: {
        if (mode == Mode::Eval) break;  // identity
        auto res = dropout(x, d.drop_p, mode, drop_rng);
        if (cache) cache->dropout_masks[i] = std::move(res.mask);
        x = std::move(res.output);
        break;
      }
      case LayerKind::Softmax:
        x = softmax(x);
        break;
    }
  }
  return x;
}

// Gradients for every parameter, aligned with model.params. `dlogits` is the
// loss gradient w.r.t. pre-softmax logits (the fused cross-entropy form), so
// the softmax layer itself is a pass-through here.
template <typename T>
std::vector<Tensor<T>> backward(const Model<T>& model,
                                const ForwardCache<T>& cache,
                                const Tensor<T>& dlogits) {
  std::vector<Tensor<T>> grads(model.params.size());
  Tensor<T> g = dlogits;
  for (std::size_t ri = model.spec.layers.size(); ri-- > 0;) {
    const LayerDesc& d = model.spec.layers[ri];
    switch (d.kind) {
      case LayerKind::Softmax:
        break;  // fused into the loss gradient
      case LayerKind::Dense: {
        const auto p = static_cast<std::size_t>(model.first_param[ri]);
        auto dg = dense_backward(
            cache.inputs[ri],
            DenseParams<T>{model.params[p], model.params[p + 1]}, g);
        grads[p] = std::move(dg.dweights);
        grads[p + 1] = std::move(dg.dbias);
        g = std::move(dg.dinput);
        break;
      }
      case LayerKind::Dropout:
        if (cache.mode == Mode::Train && d.drop_p > 0.0) {
          g = dropout_backward(cache.dropout_masks[ri], g);
        }
        break;
      case LayerKind::Flatten:
        g = reshape(g, cache.inputs[ri].shape());
        break;
      case LayerKind::MaxPool:
        g = maxpool2d_backward(cache.inputs[ri].shape(), cache.pool_argmax[ri],
                               g);
        break;
      case LayerKind::Relu:
        g = relu_backward(cache.inputs[ri], g);
        break;
      case LayerKind::Conv: {
        const auto p = static_cast<std::size_t>(model.first_param[ri]);
        auto cg = conv2d_backward(
            cache.inputs[ri],
            ConvParams<T>{model.params[p], model.params[p + 1]}, g);
        grads[p] = std::move(cg.dkernels);
        grads[p + 1] = std::move(cg.dbias);
        g = std::move(cg.dinput);
        break;
      }
    }
  }
  return grads;
}

}  // namespace asl
