#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mwgan {

#ifdef MWGAN_SINGLE_PRECISION
using real = float;
#else
using real = double;
#endif

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  s += "]";
  return s;
}

/// Dense row-major tensor. Rank 0 is a scalar holding one element.
struct Tensor {
  Shape shape;
  std::vector<real> data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), data(numel(shape), real(0)) {}
  Tensor(Shape s, real fill) : shape(std::move(s)), data(numel(shape), fill) {}

  static Tensor scalar(real v) {
    Tensor t{Shape{}};
    t.data[0] = v;
    return t;
  }

  static Tensor from(Shape s, std::vector<real> values) {
    if (numel(s) != values.size()) {
      throw std::invalid_argument("Tensor::from: shape " + shape_str(s) + " needs " +
                                  std::to_string(numel(s)) + " values, got " +
                                  std::to_string(values.size()));
    }
    Tensor t;
    t.shape = std::move(s);
    t.data = std::move(values);
    return t;
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t axis) const {
    assert(axis < shape.size());
    return shape[axis];
  }

  real& operator[](std::size_t i) { return data[i]; }
  real operator[](std::size_t i) const { return data[i]; }

  real& at(std::size_t i, std::size_t j) {
    assert(rank() == 2 && i < shape[0] && j < shape[1]);
    return data[i * shape[1] + j];
  }
  real at(std::size_t i, std::size_t j) const {
    assert(rank() == 2 && i < shape[0] && j < shape[1]);
    return data[i * shape[1] + j];
  }
  real& at(std::size_t i, std::size_t j, std::size_t k) {
    assert(rank() == 3 && i < shape[0] && j < shape[1] && k < shape[2]);
    return data[(i * shape[1] + j) * shape[2] + k];
  }
  real at(std::size_t i, std::size_t j, std::size_t k) const {
    assert(rank() == 3 && i < shape[0] && j < shape[1] && k < shape[2]);
    return data[(i * shape[1] + j) * shape[2] + k];
  }

  bool all_finite() const {
    for (real v : data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }
};

inline Tensor full_like(const Tensor& t, real v) { return Tensor(t.shape, v); }

}  // namespace mwgan
