#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace fidkit {

// Row-major float tensor. Rank is arbitrary for storage purposes; compute
// paths view tensors as matrices via rows()/cols().
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), 0.0f);
  }

  static std::size_t numel_of(const std::vector<std::size_t>& s) {
    if (s.empty()) return 0;
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
  }

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }

  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const {
    if (shape.size() < 2) return shape.size() == 1 ? shape[0] : 0;
    std::size_t c = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) c *= shape[i];
    return c;
  }

  float* row(std::size_t i) { return data.data() + i * cols(); }
  const float* row(std::size_t i) const { return data.data() + i * cols(); }

  float& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
  float at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }
};

// Plain 2-D matrix used throughout the model code.
struct Matrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<float> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : n_rows(r), n_cols(c), data(r * c, 0.0f) {}

  float* row(std::size_t i) { return data.data() + i * n_cols; }
  const float* row(std::size_t i) const { return data.data() + i * n_cols; }
  float& at(std::size_t i, std::size_t j) { return data[i * n_cols + j]; }
  float at(std::size_t i, std::size_t j) const { return data[i * n_cols + j]; }
  std::size_t numel() const { return data.size(); }
  bool empty() const { return data.empty(); }
};

inline std::string shape_string(const std::vector<std::size_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// y[0..out) += x[0..in) * W, with W stored row-major as [in x out].
inline void add_vec_mat(const float* x, std::size_t in, const float* w, std::size_t out,
                        float* y) {
  for (std::size_t i = 0; i < in; ++i) {
    const float xi = x[i];
    const float* wrow = w + i * out;
    for (std::size_t j = 0; j < out; ++j) y[j] += xi * wrow[j];
  }
}

inline void vec_mat(const float* x, std::size_t in, const float* w, std::size_t out, float* y) {
  std::fill(y, y + out, 0.0f);
  add_vec_mat(x, in, w, out, y);
}

// C = A[m x k] * B[k x n], B row-major.
inline Matrix matmul(const Matrix& a, const float* b, std::size_t k, std::size_t n) {
  Matrix c(a.n_rows, n);
  for (std::size_t i = 0; i < a.n_rows; ++i) {
    vec_mat(a.row(i), k, b, n, c.row(i));
  }
  return c;
}

inline float dot(const float* a, const float* b, std::size_t n) {
  float s = 0.0f;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// In-place softmax over a row that may contain -inf entries; -inf entries
// come out as exact zeros.
inline void softmax_inplace(float* x, std::size_t n) {
  float m = -std::numeric_limits<float>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, x[i]);
  if (std::isinf(m) && m < 0.0f) {
    // Fully masked row; leave a zero distribution rather than NaNs.
    std::fill(x, x + n, 0.0f);
    return;
  }
  float sum = 0.0f;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::isinf(x[i]) && x[i] < 0.0f ? 0.0f : std::exp(x[i] - m);
    sum += x[i];
  }
  const float inv = 1.0f / sum;
  for (std::size_t i = 0; i < n; ++i) x[i] *= inv;
}

// Log-softmax computed in double precision (used for beam scores).
inline std::vector<double> log_softmax(std::span<const float> logits) {
  double m = -std::numeric_limits<double>::infinity();
  for (float v : logits) m = std::max(m, static_cast<double>(v));
  double sum = 0.0;
  for (float v : logits) sum += std::exp(static_cast<double>(v) - m);
  const double log_z = m + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<double>(logits[i]) - log_z;
  return out;
}

// First index of the strictly greatest element.
inline std::size_t argmax(std::span<const float> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

inline void relu_inplace(float* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

}  // namespace fidkit
