#include "asl/model.hpp"

#include <sstream>

namespace asl {

namespace {

LayerDesc conv(std::size_t filters) {
  return {LayerKind::Conv, filters, 0, 0, 0.0};
}
LayerDesc relu_l() { return {LayerKind::Relu, 0, 0, 0, 0.0}; }
LayerDesc pool(std::size_t window, std::size_t stride) {
  return {LayerKind::MaxPool, 0, window, stride, 0.0};
}
LayerDesc flatten() { return {LayerKind::Flatten, 0, 0, 0, 0.0}; }
LayerDesc dense_l(std::size_t units) {
  return {LayerKind::Dense, units, 0, 0, 0.0};
}
LayerDesc drop(double p) { return {LayerKind::Dropout, 0, 0, 0, p}; }
LayerDesc softmax_l() { return {LayerKind::Softmax, 0, 0, 0, 0.0}; }

}  // namespace

std::string layer_signature(const LayerDesc& d) {
  std::ostringstream os;
  switch (d.kind) {
    case LayerKind::Conv: os << "conv " << d.units; break;
    case LayerKind::Relu: os << "relu"; break;
    case LayerKind::MaxPool: os << "pool " << d.window << " " << d.stride; break;
    case LayerKind::Flatten: os << "flatten"; break;
    case LayerKind::Dense: os << "dense " << d.units; break;
    case LayerKind::Dropout: os << "dropout " << d.drop_p; break;
    case LayerKind::Softmax: os << "softmax"; break;
  }
  return os.str();
}

ArchitectureSpec make_architecture(const std::string& name, double dropout_p) {
  ArchitectureSpec spec;
  spec.name = name;
  auto& L = spec.layers;
  if (name == "mvgg5") {
    L = {conv(16), relu_l(), conv(16), relu_l(), pool(2, 2),
         conv(48), relu_l(), pool(2, 2), flatten(),
         dense_l(128), relu_l(), drop(dropout_p),
         dense_l(10), softmax_l()};
  } else if (name == "mvgg9") {
    L = {conv(16), relu_l(), conv(16), relu_l(), pool(2, 2),
         conv(32), relu_l(), conv(32), relu_l(), pool(2, 2),
         conv(48), relu_l(), conv(48), relu_l(), pool(2, 2),
         conv(64), relu_l(), pool(4, 4), flatten(),
         dense_l(128), relu_l(), drop(dropout_p),
         dense_l(10), softmax_l()};
  } else if (name == "proposed") {
    L = {conv(32), relu_l(), conv(64), relu_l(), pool(2, 2),
         conv(64), relu_l(), pool(2, 2),
         conv(128), relu_l(), pool(2, 2), flatten(),
         dense_l(526), relu_l(), drop(dropout_p),
         dense_l(128), relu_l(), drop(dropout_p),
         dense_l(10), softmax_l()};
  } else {
    raise(ErrorCode::Config, "unknown architecture '" + name +
                                 "' (expected mvgg5, mvgg9 or proposed)");
  }
  return spec;
}

std::vector<ActShape> resolve_shapes(const ArchitectureSpec& spec,
                                     const ActShape& input) {
  std::vector<ActShape> shapes;
  shapes.reserve(spec.layers.size() + 1);
  shapes.push_back(input);
  ActShape cur = input;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerDesc& d = spec.layers[i];
    switch (d.kind) {
      case LayerKind::Conv:
        if (!cur.is_map()) {
          raise(ErrorCode::Shape, "conv layer needs a feature map input");
        }
        cur.dims[0] = d.units;  // same padding keeps H, W
        break;
      case LayerKind::MaxPool: {
        if (!cur.is_map()) {
          raise(ErrorCode::Shape, "pool layer needs a feature map input");
        }
        const std::size_t h = cur.dims[1];
        const std::size_t w = cur.dims[2];
        if (d.window > h || d.window > w || (h - d.window) % d.stride != 0 ||
            (w - d.window) % d.stride != 0) {
          raise(ErrorCode::Shape,
                "pool " + std::to_string(d.window) + "/" +
                    std::to_string(d.stride) + " does not tile " +
                    std::to_string(h) + "x" + std::to_string(w));
        }
        cur.dims[1] = (h - d.window) / d.stride + 1;
        cur.dims[2] = (w - d.window) / d.stride + 1;
        break;
      }
      case LayerKind::Flatten:
        cur = ActShape{{cur.flat()}};
        break;
      case LayerKind::Dense:
        if (cur.is_map()) {
          raise(ErrorCode::Shape, "dense layer needs a flat input");
        }
        cur = ActShape{{d.units}};
        break;
      case LayerKind::Relu:
      case LayerKind::Dropout:
      case LayerKind::Softmax:
        break;
    }
    shapes.push_back(cur);
  }
  return shapes;
}

}  // namespace asl
