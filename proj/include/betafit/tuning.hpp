#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "betafit/graph_io.hpp"
#include "betafit/solver.hpp"

namespace betafit {

struct TuneGrid {
    std::vector<double> lambdas;  // strictly increasing, all >= 0

    // {0} and e^{0.5 j} - 1 for j = 1..12
    static TuneGrid default_grid();
    void validate() const;  // throws InputError
};

struct TuneRow {
    double lambda = 0;
    double aic = 0;
    double objective = 0;
    double effective_dim = 0;
    bool converged = false;
    int iterations = 0;
    std::string failure;  // empty unless the fit threw or stalled
};

struct TuneResult {
    std::vector<TuneRow> rows;  // grid order
    double best_lambda = 0;
    std::size_t best_index = 0;
};

enum class TuneMode {
    warm,  // sequential, each fit starts from the previous solution
    cold,  // independent fits, may run concurrently
};

// n * d_max / (d_max + lambda)
double effective_dimension(std::size_t n, std::int64_t d_max, double lambda);

// effective_dimension + penalized objective at the fit. Throws InputError when
// d_max == 0.
double aic(const FitResult& fit, const DegreeHistogram& hist);

// Fits every grid point and picks the AIC minimizer among converged rows,
// preferring the larger lambda on ties. Throws TuneError if no row converged.
TuneResult tune(const DegreeHistogram& hist, const TuneGrid& grid, const FitConfig& cfg = {},
                TuneMode mode = TuneMode::warm, unsigned threads = 1);

// Trace of (I + lambda V(beta)^{-1})^{-1} = sum over eigenvalues mu of V(beta)
// of mu / (mu + lambda). Dense, O(n^3); small n only.
double exact_hat_trace(std::span<const double> beta, double lambda);

// Columns: lambda, aic, objective, effective_dim, converged, iterations.
void write_tune_csv(std::ostream& out, const TuneResult& result);

}  // namespace betafit
