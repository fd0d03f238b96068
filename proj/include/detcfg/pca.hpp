/*
 * Copyright 2026 The detcfg Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "detcfg/error.hpp"
#include "detcfg/matrix.hpp"

namespace detcfg {

struct SymmetricEigen {
  std::vector<double> values;  ///< descending
  Matrix vectors;              ///< column j is the eigenvector of values[j]
};

/// Cyclic Jacobi eigensolver for a symmetric matrix. Sweeps until the
/// off-diagonal mass is negligible relative to the diagonal.
inline SymmetricEigen jacobi_eigen(Matrix a, int max_sweeps = 100) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw DomainError("jacobi_eigen: matrix must be square");
  Matrix v(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += a(i, i) * a(i, i);
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    }
    if (off <= 1e-30 * diag || off == 0.0) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  SymmetricEigen out;
  out.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values.push_back(a(order[j], order[j]));
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

/// How many components to keep: an explicit count, or the smallest count whose
/// cumulative explained variance reaches a fraction.
struct PcaRetain {
  enum class Mode { Count, VarianceFraction };
  Mode mode = Mode::VarianceFraction;
  double value = 0.95;

  static PcaRetain count(std::size_t n) { return {Mode::Count, static_cast<double>(n)}; }
  static PcaRetain variance(double fraction) { return {Mode::VarianceFraction, fraction}; }

  friend bool operator==(const PcaRetain&, const PcaRetain&) = default;
};

struct PcaModel {
  std::vector<double> mean;
  Matrix components;  ///< r x d, one orthonormal basis vector per row
  std::vector<double> explained_variance;
  std::vector<double> explained_variance_ratio;
  std::vector<std::string> warnings;

  std::size_t dim() const noexcept { return mean.size(); }
  std::size_t retained() const noexcept { return components.rows(); }
};

/// Covariance uses the n-1 divisor. Component signs are fixed so the
/// largest-magnitude coordinate is positive.
inline PcaModel pca_fit(const Matrix& data, PcaRetain retain = {}) {
  const std::size_t n = data.rows(), d = data.cols();
  if (n < 2) throw DomainError("pca_fit needs at least 2 rows");
  if (d < 1) throw DomainError("pca_fit needs at least 1 column");
  if (retain.mode == PcaRetain::Mode::VarianceFraction && !(retain.value > 0.0 && retain.value <= 1.0))
    throw DomainError("pca variance fraction must be in (0, 1]");

  PcaModel m;
  m.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) m.mean[j] += data(i, j);
  for (double& v : m.mean) v /= static_cast<double>(n);

  Matrix cov(d, d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      const double xa = data(i, a) - m.mean[a];
      for (std::size_t b = a; b < d; ++b) cov(a, b) += xa * (data(i, b) - m.mean[b]);
    }
  }
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      cov(a, b) /= static_cast<double>(n - 1);
      cov(b, a) = cov(a, b);
    }

  SymmetricEigen eig = jacobi_eigen(cov);
  for (double& v : eig.values) v = std::max(v, 0.0);
  const double total = std::accumulate(eig.values.begin(), eig.values.end(), 0.0);
  m.components = Matrix(0, d);
  if (!(total > 0.0)) {
    m.warnings.push_back("zero-variance data: no principal components retained");
    return m;
  }

  std::size_t keep = 0;
  if (retain.mode == PcaRetain::Mode::Count) {
    keep = std::min<std::size_t>(static_cast<std::size_t>(retain.value), d);
  } else {
    double cum = 0.0;
    while (keep < d) {
      cum += eig.values[keep] / total;
      ++keep;
      if (cum >= retain.value - 1e-12) break;
    }
  }

  for (std::size_t j = 0; j < keep; ++j) {
    std::vector<double> comp(d);
    std::size_t arg = 0;
    for (std::size_t i = 0; i < d; ++i) {
      comp[i] = eig.vectors(i, j);
      if (std::abs(comp[i]) > std::abs(comp[arg])) arg = i;
    }
    if (comp[arg] < 0)
      for (double& c : comp) c = -c;
    m.components.append_row(comp);
    m.explained_variance.push_back(eig.values[j]);
    m.explained_variance_ratio.push_back(eig.values[j] / total);
  }
  return m;
}

/// Projects centered rows onto the retained components: n x r.
inline Matrix pca_transform(const PcaModel& model, const Matrix& data) {
  if (data.cols() != model.dim())
    throw DomainError("pca_transform: expected " + std::to_string(model.dim()) +
                      " columns, got " + std::to_string(data.cols()));
  const std::size_t r = model.retained();
  Matrix out(data.rows(), r, 0.0);
  std::vector<double> centered(model.dim());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t j = 0; j < model.dim(); ++j) centered[j] = data(i, j) - model.mean[j];
    for (std::size_t c = 0; c < r; ++c) {
      const auto comp = model.components.row(c);
      double s = 0.0;
      for (std::size_t j = 0; j < model.dim(); ++j) s += centered[j] * comp[j];
      out(i, c) = s;
    }
  }
  return out;
}

/// Maps projected coordinates back to the original space.
inline Matrix pca_inverse_transform(const PcaModel& model, const Matrix& projected) {
  if (projected.cols() != model.retained())
    throw DomainError("pca_inverse_transform: column count mismatch");
  Matrix out(projected.rows(), model.dim(), 0.0);
  for (std::size_t i = 0; i < projected.rows(); ++i) {
    for (std::size_t j = 0; j < model.dim(); ++j) {
      double s = model.mean[j];
      for (std::size_t c = 0; c < model.retained(); ++c)
        s += projected(i, c) * model.components(c, j);
      out(i, j) = s;
    }
  }
  return out;
}

}  // namespace detcfg
