#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <span>

#include "betafit/graph_io.hpp"

namespace betafit {

// Ridge strength on deviations from the mean parameter. Only the component
// orthogonal to the all-ones vector is penalized.
struct Penalty {
    double lambda = 0.0;

    Penalty() = default;
    explicit Penalty(double value);  // throws InputError unless finite and >= 0
};

// Logistic function, overflow-safe for any finite input.
inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// sigma'(x) = e^x / (1 + e^x)^2
inline double sigmoid_prime(double x) {
    const double e = std::exp(-std::abs(x));
    const double d = 1.0 + e;
    return e / (d * d);
}

// log(1 + e^x)
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// P(A_ij = 1) under the beta-model.
inline double edge_prob(double bi, double bj) { return sigmoid(bi + bj); }

// ---------------------------------------------------------------------------
// Full parameterization, one parameter per node. Every routine here is O(n^2)
// and exists to cross-check the degree-indexed path on small graphs.

double nll_full(std::span<const double> beta, std::span<const std::int64_t> degrees);
double objective_full(std::span<const double> beta, std::span<const std::int64_t> degrees, Penalty pen);
Eigen::VectorXd gradient_full(std::span<const double> beta, std::span<const std::int64_t> degrees, Penalty pen);
// V(beta) + lambda * (I - 11^T / n)
Eigen::MatrixXd jacobian_full(std::span<const double> beta, Penalty pen);

// ---------------------------------------------------------------------------
// Degree-indexed parameterization: delta_k is shared by every node of degree
// class k. Cost O(m^2), independent of n.

double objective_reduced(const DegreeHistogram& hist, const Eigen::VectorXd& delta, Penalty pen);
Eigen::VectorXd gradient_reduced(const DegreeHistogram& hist, const Eigen::VectorXd& delta, Penalty pen);
Eigen::MatrixXd jacobian_reduced(const DegreeHistogram& hist, const Eigen::VectorXd& delta, Penalty pen);

// Count-weighted mean of delta (equals the mean of the expanded beta).
double weighted_mean(const DegreeHistogram& hist, const Eigen::VectorXd& delta);

// Fitted expected degree of a node in each class:
// sum_{l} n_l sigma(delta_k + delta_l) - sigma(2 delta_k).
Eigen::VectorXd expected_degrees_reduced(const DegreeHistogram& hist, const Eigen::VectorXd& delta);

// ---------------------------------------------------------------------------

struct ModelDiagnostics {
    double b_n = 0;    // max over pairs of 1 / sigma'(beta_i + beta_j)
    double c_n = 0;    // min of the same
    double q_n = 0;    // 1 / max_i mean_{j != i} sigma'(beta_i + beta_j)
    double rho_n = 0;  // expected edge density
};

// Exact, O(n^2).
ModelDiagnostics diagnostics(std::span<const double> beta);
// Same quantities for the class-constant beta = expand(delta), O(m^2).
ModelDiagnostics diagnostics(const DegreeHistogram& hist, const Eigen::VectorXd& delta);

}  // namespace betafit
