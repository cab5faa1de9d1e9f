#include "betafit/tuning.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "betafit/errors.hpp"
#include "betafit/parallel.hpp"

namespace betafit {

TuneGrid TuneGrid::default_grid() {
    TuneGrid g;
    g.lambdas.push_back(0.0);
    for (int j = 1; j <= 12; ++j) g.lambdas.push_back(std::expm1(0.5 * j));
    return g;
}

void TuneGrid::validate() const {
    if (lambdas.empty()) throw InputError("lambda grid is empty");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!std::isfinite(lambdas[i]) || lambdas[i] < 0) throw InputError("lambda grid values must be finite and >= 0");
        if (i > 0 && !(lambdas[i] > lambdas[i - 1])) throw InputError("lambda grid must be strictly increasing");
    }
}

double effective_dimension(std::size_t n, std::int64_t d_max, double lambda) {
    if (d_max <= 0) throw InputError("AIC needs d_max > 0");
    const double d = static_cast<double>(d_max);
    return static_cast<double>(n) * d / (d + lambda);
}

double aic(const FitResult& fit, const DegreeHistogram& hist) {
    return effective_dimension(hist.n(), hist.max_degree(), fit.lambda) + fit.objective;
}

namespace {

TuneRow run_point(const DegreeHistogram& hist, double lambda, const FitConfig& cfg,
                  const std::optional<Eigen::VectorXd>& start, Eigen::VectorXd* solution) {
    TuneRow row;
    row.lambda = lambda;
    row.effective_dim = effective_dimension(hist.n(), hist.max_degree(), lambda);
    try {
        FitResult r = fit(hist, Penalty(lambda), cfg, start);
        row.objective = r.objective;
        row.aic = row.effective_dim + r.objective;
        row.converged = r.converged;
        row.iterations = r.iterations;
        if (!r.converged) row.failure = "not converged after " + std::to_string(r.iterations) + " iterations";
        if (r.converged && solution) *solution = std::move(r.delta_hat);
    } catch (const DivergedError& e) {
        row.iterations = e.iterations();
        row.failure = e.what();
    } catch (const Error& e) {
        row.failure = e.what();
    }
    if (!row.converged) {
        row.aic = std::numeric_limits<double>::quiet_NaN();
        if (row.failure.empty()) row.failure = "failed";
    }
    return row;
}

}  // namespace

TuneResult tune(const DegreeHistogram& hist, const TuneGrid& grid, const FitConfig& cfg, TuneMode mode,
                unsigned threads) {
    grid.validate();
    cfg.validate();
    const auto n = static_cast<std::int64_t>(hist.n());
    if (n < 2 || hist.total_degree() == 0 || hist.total_degree() == n * (n - 1))
        throw DegenerateGraphError("graph is empty or complete: no finite maximum-likelihood estimate exists");

    TuneResult res;
    res.rows.resize(grid.lambdas.size());
    if (mode == TuneMode::warm) {
        std::optional<Eigen::VectorXd> start;
        for (std::size_t i = 0; i < grid.lambdas.size(); ++i) {
            Eigen::VectorXd sol;
            res.rows[i] = run_point(hist, grid.lambdas[i], cfg, start, &sol);
            if (res.rows[i].converged) start = std::move(sol);
        }
    } else {
        parallel_for(grid.lambdas.size(), threads,
                     [&](std::size_t i) { res.rows[i] = run_point(hist, grid.lambdas[i], cfg, std::nullopt, nullptr); });
    }

    bool found = false;
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
        const auto& row = res.rows[i];
        if (!row.converged) continue;
        if (!found || row.aic <= res.rows[res.best_index].aic) {
            res.best_index = i;
            found = true;
        }
    }
    if (!found) {
        std::vector<std::pair<double, std::string>> failures;
        for (const auto& row : res.rows) failures.emplace_back(row.lambda, row.failure);
        throw TuneError("no grid point converged", std::move(failures));
    }
    res.best_lambda = res.rows[res.best_index].lambda;
    return res;
}

double exact_hat_trace(std::span<const double> beta, double lambda) {
    if (lambda < 0) throw InputError("lambda must be >= 0");
    Eigen::MatrixXd V = jacobian_full(beta, Penalty(0.0));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(V, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw Error("eigen decomposition failed");
    double trace = 0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
        const double mu = eig.eigenvalues()[i];
        trace += mu / (mu + lambda);
    }
    return trace;
}

void write_tune_csv(std::ostream& out, const TuneResult& result) {
    char buf[128];
    out << "lambda,aic,objective,effective_dim,converged,iterations\n";
    for (const auto& row : result.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%s,%d\n", row.lambda, row.aic, row.objective,
                      row.effective_dim, row.converged ? "true" : "false", row.iterations);
        out << buf;
    }
}

}  // namespace betafit
