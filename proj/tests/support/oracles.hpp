#pragma once

// Slow, shortcut-free reference computations used as test oracles. Nothing
// here calls into the library's factorization or posterior code.

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Gaussian elimination with partial pivoting.
double determinant(Matrix a);
/// Laplace expansion along the first row; n <= 7.
double cofactor_determinant(const Matrix& a);
/// Gauss-Jordan with partial pivoting.
Matrix inverse(Matrix a);

struct DensePosterior {
  Vector mean;
  Matrix cov;
};

/// C = (Phi^T Phi / sigma^2 + diag(1/gamma))^{-1}, mu = C Phi^T y / sigma^2,
/// with the inverse taken by Gauss-Jordan.
DensePosterior posterior(const Matrix& phi, const Vector& gamma, double noise_var, const Vector& y);

/// log N(x; 0, cov) via explicit inverse and determinant.
double log_gaussian(const Vector& x, const Matrix& cov);

struct Elbo {
  double reconstruction = 0.0;
  double kl_latent = 0.0;
  double kl_posterior = 0.0;
  double total = 0.0;
};

/// Three-term ELBO with the full posterior covariance: expected Gaussian
/// log-likelihood with an explicit trace, general Gaussian KL formulas.
Elbo direct_elbo(const Matrix& phi, const Vector& gamma, double noise_var, const Vector& y, const Vector& enc_mean,
                 const Vector& enc_var);

/// exp / sum in long double, no max shift.
std::vector<double> naive_softmax(const std::vector<double>& v);
double naive_logsumexp(const std::vector<double>& v);

/// Minimises (1/(2M))||y - Phi s||^2 + lambda ||s||_1 by projected gradient
/// on the split s = u - v, u, v >= 0.
Vector lasso_projected_gradient(const Matrix& phi, const Vector& y, double lambda, int iterations);
double lasso_objective(const Matrix& phi, const Vector& y, const Vector& s, double lambda);

/// Two-coefficient, one-measurement mixture toy evaluated by composite
/// Simpson quadrature over s.
struct ToyQuadrature {
  double evidence = 0.0;  // p(y)
  Vector posterior_mean;  // E[s | y]
};
ToyQuadrature toy_quadrature(const Vector& phi_row, const Vector& weights, const Matrix& gammas, double noise_var,
                             double y, int points_per_axis = 1201);

/// Central differences of a scalar function w.r.t. one entry.
double central_difference(const std::function<double()>& f, double& entry, double h);

}  // namespace oracle
