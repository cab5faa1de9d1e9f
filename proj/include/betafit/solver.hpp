#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "betafit/graph_io.hpp"
#include "betafit/model.hpp"

namespace betafit {

enum class FitMethod { newton, gradient };

struct LineSearch {
    double shrink = 0.5;        // step multiplier per backtrack
    double sufficient = 1e-4;   // Armijo constant
    int max_halvings = 60;
};

struct Bounds {
    double lo;
    double hi;
};

struct FitConfig {
    FitMethod method = FitMethod::newton;
    double tol_grad = 1e-8;  // on max_k |G_k| / n_k
    int max_iters = 1000;
    LineSearch line_search{};
    std::optional<Bounds> bounds;  // coordinatewise box on delta
    bool record_trace = false;

    void validate() const;  // throws InputError
};

struct TraceEntry {
    double objective;
    double grad_norm;  // scaled, as in the stopping rule
    double step;
};

struct FitResult {
    Eigen::VectorXd delta_hat;     // one entry per degree class
    std::vector<double> beta_hat;  // beta_hat[i] == delta_hat[node_to_class[i]]
    double lambda = 0;
    bool converged = false;
    int iterations = 0;
    double final_grad_inf_norm = 0;  // max_k |G_k| / n_k at delta_hat
    double objective = 0;
    std::vector<TraceEntry> trace;
};

// delta^0_k = 1/2 log((d_(k) + 1/2) / (n - 1/2 - d_(k)))
Eigen::VectorXd initial_delta(const DegreeHistogram& hist);

// Minimizes the penalized negative log-likelihood over class parameters.
// Throws DegenerateGraphError when the total degree is 0 or n(n-1), and
// DivergedError when ||delta||_inf exceeds 750 before convergence. When the
// iteration budget runs out the result is returned with converged == false.
FitResult fit(const DegreeHistogram& hist, Penalty pen, const FitConfig& cfg = {},
              const std::optional<Eigen::VectorXd>& start = std::nullopt);

std::vector<double> expand(const DegreeHistogram& hist, const Eigen::VectorXd& delta);

// Full-parameterization stationarity check, O(n^2).
struct StationarityReport {
    double grad_inf_norm;            // ||F(beta_hat)||_inf
    double degree_identity_residual;  // |sum_i sum_{j!=i} sigma(b_i + b_j) - sum_i d_i|
};
StationarityReport check_stationarity(const FitResult& result, const DegreeSequence& d, Penalty pen);

inline constexpr double kDivergenceLimit = 750.0;

}  // namespace betafit
