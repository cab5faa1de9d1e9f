#include "betafit/model.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "betafit/errors.hpp"

namespace betafit {

Penalty::Penalty(double value) : lambda(value) {
    if (!std::isfinite(value) || value < 0.0)
        throw InputError("lambda must be a finite non-negative number, got " + std::to_string(value));
}

namespace {

void check_lengths(std::size_t beta, std::size_t degrees) {
    if (beta != degrees) throw InputError("beta and degree vectors differ in length");
}

double mean(std::span<const double> v) {
    long double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : static_cast<double>(s / static_cast<long double>(v.size()));
}

void check_histogram(const DegreeHistogram& hist, const Eigen::VectorXd& delta) {
    if (static_cast<std::size_t>(delta.size()) != hist.m())
        throw InputError("delta has " + std::to_string(delta.size()) + " entries, histogram has " +
                         std::to_string(hist.m()) + " classes");
}

}  // namespace

double nll_full(std::span<const double> beta, std::span<const std::int64_t> degrees) {
    check_lengths(beta.size(), degrees.size());
    const std::size_t n = beta.size();
    long double acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) acc += softplus(beta[i] + beta[j]);
        acc -= static_cast<long double>(beta[i]) * static_cast<long double>(degrees[i]);
    }
    return static_cast<double>(acc);
}

double objective_full(std::span<const double> beta, std::span<const std::int64_t> degrees, Penalty pen) {
    double value = nll_full(beta, degrees);
    if (pen.lambda == 0.0) return value;
    const double bar = mean(beta);
    long double ss = 0;
    for (double b : beta) ss += static_cast<long double>(b - bar) * (b - bar);
    return value + static_cast<double>(0.5L * pen.lambda * ss);
}

Eigen::VectorXd gradient_full(std::span<const double> beta, std::span<const std::int64_t> degrees, Penalty pen) {
    check_lengths(beta.size(), degrees.size());
    const std::size_t n = beta.size();
    const double bar = mean(beta);
    Eigen::VectorXd g(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        long double s = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) s += sigmoid(beta[i] + beta[j]);
        s -= degrees[i];
        s += static_cast<long double>(pen.lambda) * (beta[i] - bar);
        g[static_cast<Eigen::Index>(i)] = static_cast<double>(s);
    }
    return g;
}

Eigen::MatrixXd jacobian_full(std::span<const double> beta, Penalty pen) {
    const auto n = static_cast<Eigen::Index>(beta.size());
    Eigen::MatrixXd J(n, n);
    const double off = pen.lambda / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double diag = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            const double v = sigmoid_prime(beta[static_cast<std::size_t>(i)] + beta[static_cast<std::size_t>(j)]);
            J(i, j) = v - off;
            diag += v;
        }
        J(i, i) = diag + static_cast<double>(n - 1) * off;
    }
    return J;
}

double weighted_mean(const DegreeHistogram& hist, const Eigen::VectorXd& delta) {
    check_histogram(hist, delta);
    long double s = 0;
    for (std::size_t k = 0; k < hist.m(); ++k) s += static_cast<long double>(hist.count(k)) * delta[static_cast<Eigen::Index>(k)];
    return hist.n() ? static_cast<double>(s / static_cast<long double>(hist.n())) : 0.0;
}

double objective_reduced(const DegreeHistogram& hist, const Eigen::VectorXd& delta, Penalty pen) {
    check_histogram(hist, delta);
    const std::size_t m = hist.m();
    const auto& cnt = hist.counts();
    const auto& deg = hist.degrees();
    long double acc = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const long double nk = static_cast<long double>(cnt[k]);
        const double dk = delta[static_cast<Eigen::Index>(k)];
        long double row = 0;
        for (std::size_t l = k + 1; l < m; ++l)
            row += static_cast<long double>(cnt[l]) * softplus(dk + delta[static_cast<Eigen::Index>(l)]);
        acc += nk * row;
        acc += 0.5L * nk * (nk - 1) * softplus(2 * dk);
        acc -= nk * static_cast<long double>(deg[k]) * dk;
    }
    if (pen.lambda != 0.0) {
        const double tilde = weighted_mean(hist, delta);
        long double ss = 0;
        for (std::size_t k = 0; k < m; ++k) {
            const double dev = delta[static_cast<Eigen::Index>(k)] - tilde;
            ss += static_cast<long double>(cnt[k]) * dev * dev;
        }
        acc += 0.5L * pen.lambda * ss;
    }
    return static_cast<double>(acc);
}

Eigen::VectorXd expected_degrees_reduced(const DegreeHistogram& hist, const Eigen::VectorXd& delta) {
    check_histogram(hist, delta);
    const std::size_t m = hist.m();
    const auto& cnt = hist.counts();
    std::vector<long double> row(m, 0.0L);
    for (std::size_t k = 0; k < m; ++k) {
        const double dk = delta[static_cast<Eigen::Index>(k)];
        row[k] += static_cast<long double>(cnt[k] - 1) * sigmoid(2 * dk);
        for (std::size_t l = k + 1; l < m; ++l) {
            const double s = sigmoid(dk + delta[static_cast<Eigen::Index>(l)]);
            row[k] += static_cast<long double>(cnt[l]) * s;
            row[l] += static_cast<long double>(cnt[k]) * s;
        }
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k) out[static_cast<Eigen::Index>(k)] = static_cast<double>(row[k]);
    return out;
}

Eigen::VectorXd gradient_reduced(const DegreeHistogram& hist, const Eigen::VectorXd& delta, Penalty pen) {
    check_histogram(hist, delta);
    const std::size_t m = hist.m();
    const auto& cnt = hist.counts();
    const auto& deg = hist.degrees();
    // Per-node gradient first (G_k / n_k), then scale by n_k.
    std::vector<long double> row(m, 0.0L);
    for (std::size_t k = 0; k < m; ++k) {
        const double dk = delta[static_cast<Eigen::Index>(k)];
        row[k] += static_cast<long double>(cnt[k] - 1) * sigmoid(2 * dk);
        for (std::size_t l = k + 1; l < m; ++l) {
            const double s = sigmoid(dk + delta[static_cast<Eigen::Index>(l)]);
            row[k] += static_cast<long double>(cnt[l]) * s;
            row[l] += static_cast<long double>(cnt[k]) * s;
        }
    }
    const double tilde = pen.lambda != 0.0 ? weighted_mean(hist, delta) : 0.0;
    Eigen::VectorXd g(static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k) {
        long double per_node = row[k] - static_cast<long double>(deg[k]);
        if (pen.lambda != 0.0)
            per_node += static_cast<long double>(pen.lambda) * (delta[static_cast<Eigen::Index>(k)] - tilde);
        g[static_cast<Eigen::Index>(k)] = static_cast<double>(static_cast<long double>(cnt[k]) * per_node);
    }
    return g;
}

Eigen::MatrixXd jacobian_reduced(const DegreeHistogram& hist, const Eigen::VectorXd& delta, Penalty pen) {
    check_histogram(hist, delta);
    const auto m = static_cast<Eigen::Index>(hist.m());
    const auto& cnt = hist.counts();
    const double n = static_cast<double>(hist.n());
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const double nk = static_cast<double>(cnt[static_cast<std::size_t>(k)]);
        for (Eigen::Index l = k + 1; l < m; ++l) {
            const double nl = static_cast<double>(cnt[static_cast<std::size_t>(l)]);
            const double v = nk * nl * sigmoid_prime(delta[k] + delta[l]);
            J(k, l) = v - nk * nl / n * pen.lambda;
            J(l, k) = J(k, l);
            J(k, k) += v;
            J(l, l) += v;
        }
        J(k, k) += 2.0 * nk * (nk - 1.0) * sigmoid_prime(2 * delta[k]) + nk * (1.0 - nk / n) * pen.lambda;
    }
    return J;
}

ModelDiagnostics diagnostics(std::span<const double> beta) {
    const std::size_t n = beta.size();
    if (n < 2) throw InputError("diagnostics need at least two nodes");
    double min_var = std::numeric_limits<double>::infinity();
    double max_var = 0;
    double max_row = 0;
    long double prob = 0;
    std::vector<long double> row(n, 0.0L);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double x = beta[i] + beta[j];
            const double v = sigmoid_prime(x);
            min_var = std::min(min_var, v);
            max_var = std::max(max_var, v);
            row[i] += v;
            row[j] += v;
            prob += sigmoid(x);
        }
    }
    for (auto r : row) max_row = std::max(max_row, static_cast<double>(r / static_cast<long double>(n - 1)));
    ModelDiagnostics out;
    out.b_n = 1.0 / min_var;
    out.c_n = 1.0 / max_var;
    out.q_n = 1.0 / max_row;
    out.rho_n = static_cast<double>(prob / (0.5L * n * (n - 1)));
    return out;
}

ModelDiagnostics diagnostics(const DegreeHistogram& hist, const Eigen::VectorXd& delta) {
    check_histogram(hist, delta);
    const std::size_t n = hist.n();
    if (n < 2) throw InputError("diagnostics need at least two nodes");
    const std::size_t m = hist.m();
    const auto& cnt = hist.counts();
    double min_var = std::numeric_limits<double>::infinity();
    double max_var = 0;
    long double prob = 0;
    std::vector<long double> row(m, 0.0L);
    for (std::size_t k = 0; k < m; ++k) {
        const double dk = delta[static_cast<Eigen::Index>(k)];
        if (cnt[k] >= 2) {
            const double v = sigmoid_prime(2 * dk);
            min_var = std::min(min_var, v);
            max_var = std::max(max_var, v);
            row[k] += static_cast<long double>(cnt[k] - 1) * v;
            prob += 0.5L * cnt[k] * (cnt[k] - 1) * sigmoid(2 * dk);
        }
        for (std::size_t l = k + 1; l < m; ++l) {
            const double x = dk + delta[static_cast<Eigen::Index>(l)];
            const double v = sigmoid_prime(x);
            min_var = std::min(min_var, v);
            max_var = std::max(max_var, v);
            row[k] += static_cast<long double>(cnt[l]) * v;
            row[l] += static_cast<long double>(cnt[k]) * v;
            prob += static_cast<long double>(cnt[k]) * cnt[l] * sigmoid(x);
        }
    }
    double max_row = 0;
    for (auto r : row) max_row = std::max(max_row, static_cast<double>(r / static_cast<long double>(n - 1)));
    ModelDiagnostics out;
    out.b_n = 1.0 / min_var;
    out.c_n = 1.0 / max_var;
    out.q_n = 1.0 / max_row;
    out.rho_n = static_cast<double>(prob / (0.5L * n * (n - 1)));
    return out;
}

}  // namespace betafit
