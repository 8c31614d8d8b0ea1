#include "stcis/relatedness.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "stcis/error.hpp"
#include "stcis/model.hpp"

namespace stcis {

Matrix Matrix::identity(std::size_t size) {
  Matrix m(size);
  for (std::size_t i = 0; i < size; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

double Matrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) t += (*this)(i, i);
  return t;
}

double Matrix::frobenius() const {
  double s = 0.0;
  for (const double v : values) s += v * v;
  return std::sqrt(s);
}

double Matrix::asymmetry() const {
  double worst = 0.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = r + 1; c < n; ++c)
      worst = std::max(worst, std::abs((*this)(r, c) - (*this)(c, r)));
  return worst;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
  require(n == rhs.n, "Matrix: dimension mismatch in product");
  Matrix out(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < n; ++k) {
      const double a = (*this)(r, k);
      for (std::size_t c = 0; c < n; ++c) out(r, c) += a * rhs(k, c);
    }
  return out;
}

Matrix Matrix::operator-(const Matrix& rhs) const {
  require(n == rhs.n, "Matrix: dimension mismatch in difference");
  Matrix out(n);
  for (std::size_t i = 0; i < values.size(); ++i) out.values[i] = values[i] - rhs.values[i];
  return out;
}

Matrix Matrix::transpose() const {
  Matrix out(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) out(c, r) = (*this)(r, c);
  return out;
}

std::vector<std::vector<double>> pool_features(std::span<const SceneImage> images) {
  require(!images.empty(), "pool_features: no images");
  std::vector<std::vector<double>> pooled;
  pooled.reserve(images.size());
  for (const auto& image : images) {
    const FeatureMap map = extract_feature_map(image);
    std::vector<double> mean(kFeatureDim, 0.0);
    for (std::size_t p = 0; p < map.pixels(); ++p) {
      const auto f = map.at(p);
      for (std::size_t d = 0; d < kFeatureDim; ++d) mean[d] += f[d];
    }
    for (double& v : mean) v /= static_cast<double>(map.pixels());
    pooled.push_back(std::move(mean));
  }
  return pooled;
}

FeatureStats fit_stats(std::span<const std::vector<double>> vectors) {
  require(vectors.size() >= 2, "fit_stats: need at least two vectors");
  const std::size_t dim = vectors.front().size();
  for (const auto& v : vectors) require(v.size() == dim, "fit_stats: ragged feature vectors");

  FeatureStats stats{std::vector<double>(dim, 0.0), Matrix(dim), vectors.size()};
  for (const auto& v : vectors)
    for (std::size_t d = 0; d < dim; ++d) stats.mu[d] += v[d];
  for (double& m : stats.mu) m /= static_cast<double>(stats.n);

  for (const auto& v : vectors)
    for (std::size_t r = 0; r < dim; ++r)
      for (std::size_t c = 0; c < dim; ++c)
        stats.sigma(r, c) += (v[r] - stats.mu[r]) * (v[c] - stats.mu[c]);
  const double denom = static_cast<double>(stats.n - 1);
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = r; c < dim; ++c) {
      const double s = 0.5 * (stats.sigma(r, c) + stats.sigma(c, r)) / denom;
      stats.sigma(r, c) = s;
      stats.sigma(c, r) = s;
    }
  return stats;
}

EigenDecomposition jacobi_eigen(const Matrix& m) {
  const std::size_t n = m.n;
  Matrix a = m;
  Matrix v = Matrix::identity(n);
  const double tolerance = 1e-12 * m.frobenius();
  constexpr int kMaxSweeps = 100;

  const auto off_norm = [&a, n]() {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        if (r != c) s += a(r, c) * a(r, c);
    return std::sqrt(s);
  };

  int sweep = 0;
  while (sweep < kMaxSweeps && off_norm() > tolerance) {
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle that annihilates a(p, q).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
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
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  EigenDecomposition out;
  out.eigenvalues.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.eigenvalues[i] = a(i, i);
  out.eigenvectors = std::move(v);
  out.sweeps = sweep;
  return out;
}

Matrix sym_sqrt(const Matrix& m, SqrtDiagnostics* diagnostics) {
  require(m.asymmetry() <= 1e-9 * std::max(1.0, m.frobenius()),
          "sym_sqrt: input matrix is not symmetric");
  const std::size_t n = m.n;
  const EigenDecomposition eig = jacobi_eigen(m);
  const double norm = m.frobenius();

  SqrtDiagnostics diag;
  diag.min_eigenvalue = n == 0 ? 0.0 : *std::min_element(eig.eigenvalues.begin(), eig.eigenvalues.end());
  if (diag.min_eigenvalue < -1e-8 * norm) {
    diag.clamped = true;
    std::clog << "warning: sym_sqrt clamped eigenvalue " << diag.min_eigenvalue
              << " of a matrix with norm " << norm << '\n';
  }

  Matrix root(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = std::sqrt(std::max(eig.eigenvalues[k], 0.0));
    if (s == 0.0) continue;
    for (std::size_t r = 0; r < n; ++r) {
      const double vr = eig.eigenvectors(r, k) * s;
      for (std::size_t c = 0; c < n; ++c) root(r, c) += vr * eig.eigenvectors(c, k);
    }
  }
  if (diagnostics != nullptr) *diagnostics = diag;
  return root;
}

double frechet_distance(const FeatureStats& a, const FeatureStats& b) {
  require(a.mu.size() == b.mu.size() && a.sigma.n == b.sigma.n && a.sigma.n == a.mu.size(),
          "frechet_distance: feature dimensions differ");
  double mean_term = 0.0;
  for (std::size_t d = 0; d < a.mu.size(); ++d) {
    const double diff = a.mu[d] - b.mu[d];
    mean_term += diff * diff;
  }
  const Matrix root_b = sym_sqrt(b.sigma);
  Matrix inner = root_b * a.sigma * root_b;
  for (std::size_t r = 0; r < inner.n; ++r)
    for (std::size_t c = r + 1; c < inner.n; ++c) {
      const double s = 0.5 * (inner(r, c) + inner(c, r));
      inner(r, c) = s;
      inner(c, r) = s;
    }
  const double cross = sym_sqrt(inner).trace();
  const double value = mean_term + a.sigma.trace() + b.sigma.trace() - 2.0 * cross;
  return std::max(value, 0.0);
}

}  // namespace stcis
