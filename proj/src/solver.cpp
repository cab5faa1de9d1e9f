#include "betafit/solver.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <string>

#include "betafit/errors.hpp"

namespace betafit {

void FitConfig::validate() const {
    if (!(tol_grad > 0)) throw InputError("tol_grad must be positive");
    if (max_iters <= 0) throw InputError("max_iters must be positive");
    if (!(line_search.shrink > 0 && line_search.shrink < 1)) throw InputError("line-search shrink must lie in (0,1)");
    if (!(line_search.sufficient > 0 && line_search.sufficient < 1))
        throw InputError("sufficient-decrease constant must lie in (0,1)");
    if (line_search.max_halvings <= 0) throw InputError("max_halvings must be positive");
    if (bounds && !(bounds->lo < bounds->hi)) throw InputError("bounds require lo < hi");
}

Eigen::VectorXd initial_delta(const DegreeHistogram& hist) {
    const double n = static_cast<double>(hist.n());
    Eigen::VectorXd delta(static_cast<Eigen::Index>(hist.m()));
    for (std::size_t k = 0; k < hist.m(); ++k) {
        const double d = static_cast<double>(hist.degree(k));
        delta[static_cast<Eigen::Index>(k)] = 0.5 * std::log((d + 0.5) / (n - 0.5 - d));
    }
    return delta;
}

std::vector<double> expand(const DegreeHistogram& hist, const Eigen::VectorXd& delta) {
    if (static_cast<std::size_t>(delta.size()) != hist.m()) throw InputError("delta does not match histogram");
    const auto& cls = hist.node_to_class();
    std::vector<double> beta(cls.size());
    for (std::size_t i = 0; i < cls.size(); ++i) beta[i] = delta[cls[i]];
    return beta;
}

namespace {

std::string format_lambda(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

class ReducedProblem {
  public:
    ReducedProblem(const DegreeHistogram& hist, Penalty pen, const std::optional<Bounds>& bounds)
        : hist_(hist), pen_(pen), bounds_(bounds), counts_(static_cast<Eigen::Index>(hist.m())) {
        for (std::size_t k = 0; k < hist.m(); ++k) counts_[static_cast<Eigen::Index>(k)] = static_cast<double>(hist.count(k));
    }

    double objective(const Eigen::VectorXd& d) const { return objective_reduced(hist_, d, pen_); }
    Eigen::VectorXd gradient(const Eigen::VectorXd& d) const { return gradient_reduced(hist_, d, pen_); }
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& d) const { return jacobian_reduced(hist_, d, pen_); }

    // Coordinate k is held at a bound when the gradient pushes it outward.
    std::vector<bool> free_mask(const Eigen::VectorXd& d, const Eigen::VectorXd& g) const {
        std::vector<bool> free(static_cast<std::size_t>(d.size()), true);
        if (!bounds_) return free;
        for (Eigen::Index k = 0; k < d.size(); ++k) {
            if ((d[k] <= bounds_->lo && g[k] > 0) || (d[k] >= bounds_->hi && g[k] < 0))
                free[static_cast<std::size_t>(k)] = false;
        }
        return free;
    }

    double scaled_norm(const Eigen::VectorXd& d, const Eigen::VectorXd& g) const {
        auto free = free_mask(d, g);
        double worst = 0;
        for (Eigen::Index k = 0; k < g.size(); ++k)
            if (free[static_cast<std::size_t>(k)]) worst = std::max(worst, std::abs(g[k]) / counts_[k]);
        return worst;
    }

    // True when every free coordinate satisfies |G_k| / n_k <= tol, or sits
    // within the rounding error of its own per-node terms (expected degree,
    // observed degree and penalty), which no iteration can reduce further.
    bool stationary(const Eigen::VectorXd& d, const Eigen::VectorXd& g, double tol) const {
        const auto free = free_mask(d, g);
        const double eps = std::numeric_limits<double>::epsilon();
        const double lam = pen_.lambda;
        const double tilde = lam != 0.0 ? weighted_mean(hist_, d) : 0.0;
        for (Eigen::Index k = 0; k < g.size(); ++k) {
            if (!free[static_cast<std::size_t>(k)]) continue;
            const double per_node = g[k] / counts_[k];
            const double dk = static_cast<double>(hist_.degree(static_cast<std::size_t>(k)));
            const double pen_term = lam * (d[k] - tilde);
            const double expected = per_node + dk - pen_term;
            const double floor = 16.0 * eps * (std::abs(expected) + dk + lam * (std::abs(d[k]) + std::abs(tilde)));
            if (std::abs(per_node) > std::max(tol, floor)) return false;
        }
        return true;
    }

    Eigen::VectorXd project(Eigen::VectorXd d) const {
        if (bounds_) d = d.cwiseMax(bounds_->lo).cwiseMin(bounds_->hi);
        return d;
    }

    const Eigen::VectorXd& counts() const { return counts_; }
    const DegreeHistogram& hist() const { return hist_; }
    bool bounded() const { return bounds_.has_value(); }

  private:
    const DegreeHistogram& hist_;
    Penalty pen_;
    std::optional<Bounds> bounds_;
    Eigen::VectorXd counts_;
};

// Newton direction restricted to free coordinates, solved with a
// Jacobi-scaled Cholesky factorization. Empty on failure.
std::optional<Eigen::VectorXd> newton_direction(const Eigen::MatrixXd& J, const Eigen::VectorXd& g,
                                                const std::vector<bool>& free) {
    std::vector<Eigen::Index> idx;
    for (std::size_t k = 0; k < free.size(); ++k)
        if (free[k]) idx.push_back(static_cast<Eigen::Index>(k));
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(g.size());
    if (idx.empty()) return dir;
    const auto mf = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd A(mf, mf);
    Eigen::VectorXd rhs(mf), scale(mf);
    for (Eigen::Index a = 0; a < mf; ++a) {
        const double diag = J(idx[a], idx[a]);
        scale[a] = diag > std::numeric_limits<double>::min() ? 1.0 / std::sqrt(diag) : 1.0;
    }
    for (Eigen::Index a = 0; a < mf; ++a) {
        rhs[a] = -g[idx[a]] * scale[a];
        for (Eigen::Index b = 0; b < mf; ++b) A(a, b) = J(idx[a], idx[b]) * scale[a] * scale[b];
    }
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) {
        A.diagonal().array() += 1e-10 * A.trace() / static_cast<double>(mf);
        llt.compute(A);
        if (llt.info() != Eigen::Success) return std::nullopt;
    }
    Eigen::VectorXd x = llt.solve(rhs);
    if (!x.allFinite()) return std::nullopt;
    for (Eigen::Index a = 0; a < mf; ++a) dir[idx[a]] = x[a] * scale[a];
    return dir;
}

Eigen::VectorXd scaled_gradient_direction(const Eigen::VectorXd& g, const Eigen::VectorXd& counts,
                                          const std::vector<bool>& free) {
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(g.size());
    for (Eigen::Index k = 0; k < g.size(); ++k)
        if (free[static_cast<std::size_t>(k)]) dir[k] = -g[k] / counts[k];
    return dir;
}

// Shifts every class parameter by a common constant so that the fitted
// expected degrees add up to the observed total. The penalty is blind to the
// shift, so at the optimum this only removes rounding left in the unpenalized
// direction.
Eigen::VectorXd polish_intercept(const DegreeHistogram& hist, Eigen::VectorXd delta) {
    const auto m = hist.m();
    const long double target = static_cast<long double>(hist.total_degree());
    for (int iter = 0; iter < 8; ++iter) {
        long double sum = 0, slope = 0;
        for (std::size_t k = 0; k < m; ++k) {
            const long double nk = static_cast<long double>(hist.count(k));
            const double dk = delta[static_cast<Eigen::Index>(k)];
            sum += nk * (nk - 1) * sigmoid(2 * dk);
            slope += nk * (nk - 1) * 2.0L * sigmoid_prime(2 * dk);
            for (std::size_t l = k + 1; l < m; ++l) {
                const double x = dk + delta[static_cast<Eigen::Index>(l)];
                const long double w = 2.0L * nk * static_cast<long double>(hist.count(l));
                sum += w * sigmoid(x);
                slope += w * 2.0L * sigmoid_prime(x);
            }
        }
        const long double resid = sum - target;
        if (std::abs(static_cast<double>(resid)) <= 1e-15 * static_cast<double>(target) || slope <= 0) break;
        delta.array() -= static_cast<double>(resid / slope);
    }
    return delta;
}

}  // namespace

FitResult fit(const DegreeHistogram& hist, Penalty pen, const FitConfig& cfg,
              const std::optional<Eigen::VectorXd>& start) {
    cfg.validate();
    const auto n = static_cast<std::int64_t>(hist.n());
    const std::int64_t total = hist.total_degree();
    if (n < 2 || total == 0 || total == n * (n - 1)) {
        throw DegenerateGraphError(total == 0 ? "graph has no edges: no finite maximum-likelihood estimate exists"
                                              : "graph is complete: no finite maximum-likelihood estimate exists");
    }

    ReducedProblem prob(hist, pen, cfg.bounds);
    Eigen::VectorXd delta;
    if (start) {
        if (static_cast<std::size_t>(start->size()) != hist.m()) throw InputError("start vector does not match histogram");
        if (!start->allFinite()) throw InputError("start vector is not finite");
        delta = *start;
    } else {
        delta = initial_delta(hist);
    }
    delta = prob.project(std::move(delta));

    FitResult res;
    res.lambda = pen.lambda;
    double f = prob.objective(delta);
    Eigen::VectorXd g = prob.gradient(delta);
    double last_step = 0;
    double step_hint = 1.0;
    const auto& ls = cfg.line_search;

    for (;;) {
        const double gnorm = prob.scaled_norm(delta, g);
        if (cfg.record_trace) res.trace.push_back({f, gnorm, last_step});
        if (prob.stationary(delta, g, cfg.tol_grad)) {
            res.converged = true;
            break;
        }
        if (res.iterations >= cfg.max_iters) break;

        const auto free = prob.free_mask(delta, g);
        bool newton = false;
        Eigen::VectorXd dir;
        if (cfg.method == FitMethod::newton) {
            if (auto nd = newton_direction(prob.jacobian(delta), g, free)) {
                dir = std::move(*nd);
                newton = g.dot(dir) < 0;
            }
        }
        if (!newton) dir = scaled_gradient_direction(g, prob.counts(), free);

        double t = newton ? 1.0 : step_hint;
        bool accepted = false;
        Eigen::VectorXd trial, gt;
        double ft = 0;
        // Objective differences below this are rounding noise.
        const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f));
        for (int h = 0; h < ls.max_halvings; ++h) {
            trial = prob.project(delta + t * dir);
            ft = prob.objective(trial);
            if (!std::isfinite(ft)) {
                t *= ls.shrink;
                continue;
            }
            const double slope = g.dot(trial - delta);
            if (std::abs(ls.sufficient * slope) > noise) {
                if (ft <= f + ls.sufficient * slope) {
                    accepted = true;
                    break;
                }
            } else if (ft - f <= noise) {
                // The predicted decrease is lost in rounding. Convexity still
                // certifies descent if the slope at the trial point is non-positive.
                gt = prob.gradient(trial);
                if (gt.dot(trial - delta) <= 0.0) {
                    accepted = true;
                    break;
                }
                gt.resize(0);
            }
            t *= ls.shrink;
        }
        if (!accepted) break;

        delta = std::move(trial);
        f = ft;
        g = gt.size() ? std::move(gt) : prob.gradient(delta);
        last_step = t;
        ++res.iterations;
        if (!newton) step_hint = std::min(t / ls.shrink, 1e12);
        if (delta.cwiseAbs().maxCoeff() > kDivergenceLimit) {
            throw DivergedError("iterates left the finite region after " + std::to_string(res.iterations) +
                                    " iterations (|delta| > 750); the penalized MLE may not exist for lambda = " +
                                    format_lambda(pen.lambda),
                                res.iterations);
        }
    }

    if (res.converged && !prob.bounded()) {
        Eigen::VectorXd polished = polish_intercept(hist, delta);
        Eigen::VectorXd gp = prob.gradient(polished);
        if (prob.stationary(polished, gp, cfg.tol_grad)) {
            delta = std::move(polished);
            g = std::move(gp);
            f = prob.objective(delta);
        }
    }

    res.final_grad_inf_norm = prob.scaled_norm(delta, g);
    res.objective = f;
    res.beta_hat = expand(hist, delta);
    res.delta_hat = std::move(delta);
    return res;
}

StationarityReport check_stationarity(const FitResult& result, const DegreeSequence& d, Penalty pen) {
    const auto& beta = result.beta_hat;
    if (beta.size() != d.n()) throw InputError("fit and degree sequence differ in length");
    Eigen::VectorXd F = gradient_full(beta, d.degrees, pen);
    long double expected = 0;
    for (std::size_t i = 0; i < beta.size(); ++i)
        for (std::size_t j = i + 1; j < beta.size(); ++j) expected += 2.0L * sigmoid(beta[i] + beta[j]);
    StationarityReport rep;
    rep.grad_inf_norm = F.size() ? F.cwiseAbs().maxCoeff() : 0.0;
    rep.degree_identity_residual = std::abs(static_cast<double>(expected - static_cast<long double>(d.total())));
    return rep;
}

}  // namespace betafit
