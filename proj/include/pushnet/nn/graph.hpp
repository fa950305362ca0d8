#pragma once

#include "pushnet/core/error.hpp"

#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace pushnet::nn {

inline size_t shape_size(const std::vector<int>& shape) {
  return std::accumulate(shape.begin(), shape.end(), size_t{1},
                         [](size_t a, int d) { return a * static_cast<size_t>(d); });
}

inline std::string shape_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, T fill = T(0))
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}
  Tensor(std::vector<int> shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_size(shape_))
      fail(ErrorKind::InvalidArgument, "tensor: data length does not match shape " + shape_string(shape_));
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(i); }
  size_t size() const { return data_.size(); }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }
  T& operator[](size_t i) { return data_[i]; }
  T operator[](size_t i) const { return data_[i]; }

  void reshape(std::vector<int> shape) {
    if (shape_size(shape) != data_.size()) fail(ErrorKind::InvalidArgument, "tensor: bad reshape");
    shape_ = std::move(shape);
  }

  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

 private:
  std::vector<int> shape_;
  std::vector<T> data_;
};

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool decay = true;  // subject to weight decay
};

/// Named parameters in insertion order.
template <typename T>
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  Parameter<T>& add(const std::string& name, std::vector<int> shape, bool decay) {
    if (index_.count(name)) fail(ErrorKind::InvalidArgument, "duplicate parameter " + name);
    auto p = std::make_unique<Parameter<T>>();
    p->name = name;
    p->value = Tensor<T>(shape);
    p->grad = Tensor<T>(shape);
    p->decay = decay;
    index_[name] = params_.size();
    params_.push_back(std::move(p));
    return *params_.back();
  }

  Parameter<T>* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
  }
  const Parameter<T>* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
  }
  Parameter<T>& get(const std::string& name) {
    Parameter<T>* p = find(name);
    if (!p) fail(ErrorKind::InvalidArgument, "unknown parameter " + name);
    return *p;
  }

  size_t size() const { return params_.size(); }
  Parameter<T>& operator[](size_t i) { return *params_[i]; }
  const Parameter<T>& operator[](size_t i) const { return *params_[i]; }

  size_t scalar_count() const {
    size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) std::fill(p->grad.values().begin(), p->grad.values().end(), T(0));
  }

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& p : params_) {
      Parameter<U>& q = out.add(p->name, p->value.shape(), p->decay);
      q.value = p->value.template cast<U>();
    }
    return out;
  }

  void copy_values_from(const ParamStore& other) {
    for (const auto& p : params_) p->value = other.find(p->name) ? other.find(p->name)->value : p->value;
  }

 private:
  std::vector<std::unique_ptr<Parameter<T>>> params_;
  std::map<std::string, size_t> index_;
};

/// Fan-in scaled uniform initialization (He-uniform bound sqrt(6 / fan_in)).
template <typename T>
void init_fan_in(Parameter<T>& p, int fan_in, std::mt19937_64& rng, double gain = 1.0) {
  const double bound = gain * std::sqrt(6.0 / std::max(1, fan_in));
  std::uniform_real_distribution<double> d(-bound, bound);
  for (auto& v : p.value.values()) v = static_cast<T>(d(rng));
}

/// Define-by-run reverse-mode tape. Node ids are topologically ordered by
/// construction.
template <typename T>
class Graph {
 public:
  using Var = int;
  using Backward = std::function<void(Graph&, Var self)>;

  Var constant(Tensor<T> v) { return push(std::move(v), false, nullptr, nullptr); }
  /// Leaf whose gradient is kept (gradient checking of inputs).
  Var variable(Tensor<T> v) { return push(std::move(v), true, nullptr, nullptr); }
  Var param(Parameter<T>& p) { return push(p.value, true, nullptr, &p); }

  /// Adds an op node; it requires a gradient iff any input does.
  Var op(Tensor<T> value, std::initializer_list<Var> inputs, Backward backward) {
    return op(std::move(value), std::vector<Var>(inputs), std::move(backward));
  }
  Var op(Tensor<T> value, const std::vector<Var>& inputs, Backward backward) {
    bool rg = false;
    for (Var i : inputs) rg = rg || nodes_.at(i).requires_grad;
    return push(std::move(value), rg, rg ? std::move(backward) : nullptr, nullptr);
  }
  /// Passes the value through and blocks gradients.
  Var stop_gradient(Var x) { return push(nodes_.at(x).value, false, nullptr, nullptr); }

  const Tensor<T>& value(Var v) const { return nodes_.at(v).value; }
  bool requires_grad(Var v) const { return nodes_.at(v).requires_grad; }

  /// Gradient buffer of v, allocated as zeros on first use.
  Tensor<T>& grad(Var v) {
    Node& n = nodes_.at(v);
    if (n.grad.size() != n.value.size()) n.grad = Tensor<T>(n.value.shape());
    return n.grad;
  }
  bool has_grad(Var v) const { return nodes_.at(v).grad.size() == nodes_.at(v).value.size(); }

  /// Seeds d out / d out = 1 (out must hold one element) and runs the tape
  /// backwards; parameter gradients are accumulated into Parameter::grad.
  void backward(Var out) {
    if (value(out).size() != 1) fail(ErrorKind::InvalidArgument, "backward: output must be scalar");
    grad(out)[0] = T(1);
    for (Var v = out; v >= 0; --v) {
      Node& n = nodes_[v];
      if (!n.requires_grad || !has_grad(v)) continue;
      if (n.backward) n.backward(*this, v);
      if (n.param) {
        auto& pg = n.param->grad.values();
        const auto& g = n.grad.values();
        for (size_t i = 0; i < g.size(); ++i) pg[i] += g[i];
      }
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    Backward backward;
    Parameter<T>* param = nullptr;
  };

  Var push(Tensor<T> value, bool rg, Backward bw, Parameter<T>* p) {
    nodes_.push_back(Node{std::move(value), Tensor<T>(), rg, std::move(bw), p});
    return static_cast<Var>(nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
};

}  // namespace pushnet::nn
