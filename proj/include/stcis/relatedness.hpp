#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stcis/image.hpp"

namespace stcis {

// Dense square matrix, row-major.
struct Matrix {
  std::size_t n = 0;
  std::vector<double> values;

  Matrix() = default;
  explicit Matrix(std::size_t size, double fill = 0.0) : n(size), values(size * size, fill) {}
  static Matrix identity(std::size_t size);
  static Matrix diagonal(std::span<const double> diag);

  double& operator()(std::size_t r, std::size_t c) { return values[r * n + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * n + c]; }

  double trace() const;
  double frobenius() const;
  // max |m(r,c) - m(c,r)|
  double asymmetry() const;

  Matrix operator*(const Matrix& rhs) const;
  Matrix operator-(const Matrix& rhs) const;
  Matrix transpose() const;
};

struct FeatureStats {
  std::vector<double> mu;
  Matrix sigma;
  std::size_t n = 0;
};

// One vector per image: the mean of extract_features over all its pixels.
std::vector<std::vector<double>> pool_features(std::span<const SceneImage> images);

// Sample mean and unbiased (n-1) covariance, symmetrized.
FeatureStats fit_stats(std::span<const std::vector<double>> vectors);

struct EigenDecomposition {
  std::vector<double> eigenvalues;
  Matrix eigenvectors;  // columns
  int sweeps = 0;
};

// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
// 1e-12 * ||m||_F.
EigenDecomposition jacobi_eigen(const Matrix& m);

struct SqrtDiagnostics {
  double min_eigenvalue = 0.0;
  bool clamped = false;  // an eigenvalue below -1e-8 * ||m|| was clamped
};

// Principal square root of a symmetric PSD matrix; negative eigenvalues are
// clamped to zero.
Matrix sym_sqrt(const Matrix& m, SqrtDiagnostics* diagnostics = nullptr);

// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_b^1/2 S_a S_b^1/2)^1/2), clamped at 0.
double frechet_distance(const FeatureStats& a, const FeatureStats& b);

}  // namespace stcis
