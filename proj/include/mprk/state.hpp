#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>

#include "mprk/precision.hpp"

namespace mprk {

/// Largest system dimension the inline storage supports.
inline constexpr std::size_t kMaxDimension = 8;

/// ODE state at a single precision level. Storage is inline so stage
/// arithmetic never touches the heap.
template <Real T>
class StateVector {
 public:
  using value_type = T;
  static constexpr Precision precision = precision_of<T>;

  StateVector() = default;

  explicit StateVector(std::size_t dimension) : size_(dimension) {
    if (dimension == 0 || dimension > kMaxDimension) {
      throw std::invalid_argument("state dimension out of range");
    }
    data_.fill(T(0));
  }

  StateVector(std::initializer_list<T> values) : StateVector(values.size()) {
    std::copy(values.begin(), values.end(), data_.begin());
  }

  std::size_t size() const noexcept { return size_; }

  T& operator[](std::size_t i) noexcept {
    assert(i < size_);
    return data_[i];
  }
  const T& operator[](std::size_t i) const noexcept {
    assert(i < size_);
    return data_[i];
  }

  std::span<T> values() noexcept { return {data_.data(), size_}; }
  std::span<const T> values() const noexcept { return {data_.data(), size_}; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.begin() + size_; }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.begin() + size_; }

  friend bool operator==(const StateVector& a, const StateVector& b) noexcept {
    return a.size_ == b.size_ &&
           std::equal(a.begin(), a.end(), b.begin());
  }

 private:
  std::array<T, kMaxDimension> data_{};
  std::size_t size_ = 0;
};

template <Real To, Real From>
StateVector<To> precision_cast(const StateVector<From>& x) noexcept {
  if constexpr (std::same_as<To, From>) {
    return x;
  } else {
    StateVector<To> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = precision_cast<To>(x[i]);
    return y;
  }
}

template <Real T>
T norm_inf(const StateVector<T>& x) noexcept {
  T m = T(0);
  for (const T& v : x) {
    const T a = num::abs(v);
    // NaN must not be swallowed by the comparison.
    if (!(a <= m)) m = a;
  }
  return m;
}

template <Real T>
T norm_euclidean(const StateVector<T>& x) noexcept {
  T s = T(0);
  for (const T& v : x) s += v * v;
  return num::sqrt(s);
}

template <Real T>
bool all_finite(const StateVector<T>& x) noexcept {
  return std::all_of(x.begin(), x.end(),
                     [](const T& v) { return num::isfinite(v); });
}

/// Dense row-major square matrix with inline storage.
template <Real T>
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n) : n_(n) {
    if (n == 0 || n > kMaxDimension) {
      throw std::invalid_argument("matrix dimension out of range");
    }
    data_.fill(T(0));
  }
  Matrix(std::size_t n, std::initializer_list<T> row_major) : Matrix(n) {
    if (row_major.size() != n * n) {
      throw std::invalid_argument("matrix initializer has wrong size");
    }
    auto it = row_major.begin();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) (*this)(i, j) = *it++;
  }

  std::size_t size() const noexcept { return n_; }
  T& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * kMaxDimension + j]; }
  const T& operator()(std::size_t i, std::size_t j) const noexcept {
    return data_[i * kMaxDimension + j];
  }

 private:
  std::array<T, kMaxDimension * kMaxDimension> data_{};
  std::size_t n_ = 0;
};

}  // namespace mprk
