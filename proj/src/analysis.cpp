#include "betafit/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

#include "betafit/errors.hpp"
#include "betafit/model.hpp"
#include "betafit/parallel.hpp"
#include "betafit/simulate.hpp"

namespace betafit {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_double(std::string_view text, double& out) {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

std::vector<TopicRelevance> read_topics(std::istream& in) {
    std::vector<TopicRelevance> topics;
    std::unordered_map<std::string, std::size_t> where;
    std::string raw;
    std::size_t line_no = 0;
    bool first_data = true;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto c1 = line.find(',');
        const auto c2 = line.rfind(',');
        if (c1 == std::string_view::npos || c1 == c2) throw ParseError("expected topic,node_label,score", line_no);
        const std::string_view topic = trim(line.substr(0, c1));
        const std::string_view label = trim(line.substr(c1 + 1, c2 - c1 - 1));
        const std::string_view score_text = trim(line.substr(c2 + 1));
        double score = 0;
        if (!parse_double(score_text, score)) {
            if (first_data && topic == "topic") {
                first_data = false;
                continue;
            }
            throw ParseError("score \"" + std::string(score_text) + "\" is not a number", line_no);
        }
        first_data = false;
        if (!(score >= 0.0 && score <= 1.0)) throw ParseError("score must lie in [0,1]", line_no);
        auto [it, inserted] = where.try_emplace(std::string(topic), topics.size());
        if (inserted) topics.push_back({std::string(topic), {}});
        topics[it->second].entries.push_back({std::string(label), score});
    }
    return topics;
}

WabsResult wabs(std::span<const TopicRelevance> topics, std::span<const double> beta_hat,
                const std::unordered_map<std::string, std::size_t>& index) {
    WabsResult res;
    for (const auto& t : topics) {
        WabsRow row;
        row.topic = t.topic;
        long double sum = 0;
        for (const auto& e : t.entries) {
            auto it = index.find(e.node_label);
            if (it == index.end() || it->second >= beta_hat.size()) {
                ++res.unresolved;
                continue;
            }
            ++row.paper_count;
            sum += std::exp(static_cast<long double>(beta_hat[it->second])) * e.score;
        }
        row.wabs = static_cast<double>(sum);
        res.rows.push_back(std::move(row));
    }
    std::sort(res.rows.begin(), res.rows.end(), [](const WabsRow& a, const WabsRow& b) {
        if (a.wabs != b.wabs) return a.wabs > b.wabs;
        return a.topic < b.topic;
    });
    return res;
}

void write_wabs_csv(std::ostream& out, const WabsResult& result) {
    out << "topic,paper_count,wabs\n";
    char buf[64];
    for (const auto& r : result.rows) {
        std::snprintf(buf, sizeof buf, "%.17g", r.wabs);
        out << r.topic << ',' << r.paper_count << ',' << buf << '\n';
    }
}

PowerResult largest_abs_eigenvalue(const Eigen::MatrixXd& a, const PowerConfig& cfg) {
    if (a.rows() != a.cols()) throw InputError("matrix must be square");
    PowerResult res;
    const Eigen::Index n = a.rows();
    if (n == 0) return res;
    // Deterministic start with no special alignment to structured eigenvectors.
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = 1.0 + 0.1 * static_cast<double>((i * 7919) % 13);
    v.normalize();
    double mu = 0;
    Eigen::VectorXd av(n);
    for (int it = 1; it <= cfg.max_iters; ++it) {
        av.noalias() = a * v;
        const double next = av.squaredNorm();  // v' A^2 v for unit v
        res.iterations = it;
        if (next == 0.0) {
            mu = 0.0;
            res.converged = true;
            break;
        }
        v.noalias() = a * av;
        v /= v.norm();
        if (it > 1 && std::abs(next - mu) <= cfg.tol * next) {
            mu = next;
            res.converged = true;
            break;
        }
        mu = next;
    }
    res.value = std::sqrt(mu);
    return res;
}

Eigen::MatrixXd normalized_residual(const EdgeList& g, std::span<const double> beta) {
    const std::size_t n = g.n;
    if (beta.size() != n) throw InputError("beta and graph differ in node count");
    if (n < 2) throw InputError("need at least two nodes");
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd at(N, N);
    const double eps = std::numeric_limits<double>::epsilon();
    const double scale = static_cast<double>(n - 1);
    for (Eigen::Index i = 0; i < N; ++i) {
        at(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < N; ++j) {
            const double p = sigmoid(beta[static_cast<std::size_t>(i)] + beta[static_cast<std::size_t>(j)]);
            if (p <= eps || p >= 1.0 - eps)
                throw NormalizationError("fitted probability saturated at pair (" + std::to_string(i) + "," +
                                         std::to_string(j) + "); residual normalization undefined");
            const double v = -p / std::sqrt(scale * p * (1.0 - p));
            at(i, j) = v;
            at(j, i) = v;
        }
    }
    for (const auto& e : g.edges) {
        const double p = sigmoid(beta[e.u] + beta[e.v]);
        const double v = (1.0 - p) / std::sqrt(scale * p * (1.0 - p));
        at(e.u, e.v) = v;
        at(e.v, e.u) = v;
    }
    return at;
}

GofStatistic gof_statistic(const EdgeList& g, std::span<const double> beta, const PowerConfig& cfg) {
    const Eigen::MatrixXd at = normalized_residual(g, beta);
    const PowerResult pr = largest_abs_eigenvalue(at, cfg);
    GofStatistic s;
    s.sigma1 = pr.value;
    s.iterations = pr.iterations;
    s.t_stat = std::pow(static_cast<double>(g.n), 2.0 / 3.0) * (s.sigma1 - 2.0);
    return s;
}

GofStatistic gof_statistic(const EdgeList& g, const FitResult& fit, const PowerConfig& cfg) {
    return gof_statistic(g, fit.beta_hat, cfg);
}

std::vector<GofRecord> run_gof_mc(const GofMcConfig& cfg) {
    if (cfg.replicates == 0) throw InputError("replicates must be >= 1");
    SimScenario scn;
    scn.n = cfg.n;
    scn.setting = Setting::gof;
    scn.b = cfg.b;
    const auto beta = beta_star(scn);
    const Penalty pen(cfg.lambda);
    std::vector<GofRecord> records(cfg.replicates);
    parallel_for(cfg.replicates, std::max(1u, cfg.threads), [&](std::size_t r) {
        GofRecord& rec = records[r];
        rec.replicate = r;
        try {
            Rng rng(cfg.seed ^ static_cast<std::uint64_t>(r));
            const EdgeList g = sample_network(beta, rng);
            const auto hist = build_histogram(degrees_of(g));
            const FitResult f = fit(hist, pen, cfg.fit);
            if (!f.converged) throw DivergedError("not converged", f.iterations);
            const auto s = gof_statistic(g, f, cfg.power);
            rec.sigma1 = s.sigma1;
            rec.t_stat = s.t_stat;
            rec.ok = true;
        } catch (const Error& e) {
            rec.failure = e.what();
        }
    });
    std::size_t failed = 0;
    for (const auto& r : records) failed += r.ok ? 0 : 1;
    if (2 * failed > cfg.replicates)
        throw MonteCarloError(std::to_string(failed) + " of " + std::to_string(cfg.replicates) + " replicates failed");
    return records;
}

void write_gof_csv(std::ostream& out, std::span<const GofRecord> records) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "# TW1 reference: mean %.4f, sd %.3f\n", kTw1Mean, kTw1Sd);
    out << buf << "# TW1 quantiles (p:q):";
    for (const auto& q : kTw1Quantiles) {
        std::snprintf(buf, sizeof buf, " %.2f:%.2f", q.p, q.q);
        out << buf;
    }
    out << "\nreplicate,sigma1,t_stat\n";
    for (const auto& r : records) {
        if (!r.ok) continue;
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", r.replicate, r.sigma1, r.t_stat);
        out << buf;
    }
}

}  // namespace betafit
