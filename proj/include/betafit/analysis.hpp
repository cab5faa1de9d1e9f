#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "betafit/graph_io.hpp"
#include "betafit/solver.hpp"

namespace betafit {

// ---------------------------------------------------------------------------
// Topic scoring

struct TopicEntry {
    std::string node_label;
    double score = 0;  // in [0, 1]
};

struct TopicRelevance {
    std::string topic;
    std::vector<TopicEntry> entries;
};

// CSV rows "topic,node_label,score", grouped by topic in first-appearance
// order. The label may itself contain commas. A leading header row and '#'
// comment lines are skipped.
std::vector<TopicRelevance> read_topics(std::istream& in);

struct WabsRow {
    std::string topic;
    std::size_t paper_count = 0;  // resolved entries
    double wabs = 0;
};

struct WabsResult {
    std::vector<WabsRow> rows;  // descending wabs, ties by topic
    std::size_t unresolved = 0;
};

// sum over resolved entries of exp(beta_hat[node]) * score.
WabsResult wabs(std::span<const TopicRelevance> topics, std::span<const double> beta_hat,
                const std::unordered_map<std::string, std::size_t>& index);

// Columns: topic, paper_count, wabs.
void write_wabs_csv(std::ostream& out, const WabsResult& result);

// ---------------------------------------------------------------------------
// Residual spectrum

struct PowerConfig {
    double tol = 1e-8;  // relative change of the Rayleigh quotient
    int max_iters = 10000;
};

struct PowerResult {
    double value = 0;
    int iterations = 0;
    bool converged = false;
};

// max |eigenvalue| of a symmetric matrix, by power iteration on its square.
PowerResult largest_abs_eigenvalue(const Eigen::MatrixXd& a, const PowerConfig& cfg = {});

// (A_ij - P_ij) / sqrt((n-1) P_ij (1 - P_ij)) with P_ij = sigma(beta_i + beta_j)
// and zero diagonal. Throws NormalizationError if some P_ij rounds to 0 or 1.
Eigen::MatrixXd normalized_residual(const EdgeList& g, std::span<const double> beta);

struct GofStatistic {
    double sigma1 = 0;
    double t_stat = 0;  // n^{2/3} (sigma1 - 2)
    int iterations = 0;
};

GofStatistic gof_statistic(const EdgeList& g, std::span<const double> beta, const PowerConfig& cfg = {});
GofStatistic gof_statistic(const EdgeList& g, const FitResult& fit, const PowerConfig& cfg = {});

// Tracy-Widom (beta = 1) reference values for QQ headers (Johnstone, 2001).
inline constexpr double kTw1Mean = -1.2065;
inline constexpr double kTw1Sd = 1.268;
struct Quantile {
    double p;
    double q;
};
inline constexpr Quantile kTw1Quantiles[] = {
    {0.01, -3.90}, {0.05, -3.18}, {0.10, -2.78}, {0.30, -1.91}, {0.50, -1.27},
    {0.70, -0.59}, {0.90, 0.45},  {0.95, 0.98},  {0.99, 2.02},
};

struct GofMcConfig {
    std::size_t n = 400;
    double b = -0.1;
    double lambda = 0.0;
    std::size_t replicates = 100;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    FitConfig fit{};
    PowerConfig power{};
};

struct GofRecord {
    std::size_t replicate = 0;
    bool ok = false;
    std::string failure;
    double sigma1 = 0;
    double t_stat = 0;
};

// Samples from the two-block gof setting, fits, and evaluates T per replicate.
// More than half failing throws MonteCarloError.
std::vector<GofRecord> run_gof_mc(const GofMcConfig& cfg);

// TW1 reference as '#' comment lines, then columns replicate, sigma1, t_stat.
void write_gof_csv(std::ostream& out, std::span<const GofRecord> records);

}  // namespace betafit
