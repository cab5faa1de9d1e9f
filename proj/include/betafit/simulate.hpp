#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "betafit/graph_io.hpp"
#include "betafit/rng.hpp"
#include "betafit/solver.hpp"

namespace betafit {

enum class Setting {
    explicit_beta,
    i, ii, iii, iv, v, vi,  // two blocks split at floor(n/5)
    simu2_1,                // base -0.1 log n, +-0.4 log n on the first n/10 and next n/10
    simu2_2,                // base -0.3 log n, +-0.2 log n on the first n/20 and next n/20
    aic_dense,              // -1/5 log n on the first n/10, 1/2 log n elsewhere
    aic_sparse,             // -1/3 log n on the first n/3, (-1/3 + 0.05) log n elsewhere
    gof,                    // b log n on the first floor(0.4 n), 0.1 log n elsewhere
};

Setting parse_setting(const std::string& name);  // throws InputError
std::string setting_name(Setting s);

struct SimScenario {
    std::size_t n = 0;
    Setting setting = Setting::explicit_beta;
    double b = -0.1;                // gof setting only
    std::vector<double> beta;       // explicit_beta only
    std::uint64_t seed = 0;
};

std::vector<double> beta_star(const SimScenario& scn);

// Working lambda attached to settings (i)-(vi); empty for the others.
std::optional<double> recommended_lambda(Setting s, std::size_t n);

// Nodes whose true parameter departs from the common base value, for the
// settings that define one; empty otherwise.
std::vector<std::size_t> active_set(const SimScenario& scn);

// Draws every pair (i, j) independently with probability sigma(beta_i + beta_j).
// Rows whose remaining pairs all have probability below 0.01 use geometric
// skipping with thinning; otherwise pairs are scanned in blocks and skipping
// is used block by block.
EdgeList sample_network(std::span<const double> beta, Rng& rng);
EdgeList sample_network(const SimScenario& scn);

// Same draw as sample_network, keeping only the degrees.
std::vector<std::int64_t> sample_degrees(std::span<const double> beta, Rng& rng);

// Mean expected degree density sum_{i<j} sigma(beta_i + beta_j) / C(n,2).
double expected_density(std::span<const double> beta);

// Limit of the heavily penalized fit. center is the V(beta_breve)-weighted
// mean of (beta_i + beta_j) / 2; variance follows the closed form
// n(n-1) 1'V(beta)1 / (2 (1'V(beta_breve)1)^2). coordinate_variance divides
// that by C(n,2). a_bar defaults to the expected density.
struct LargeLambdaPrediction {
    double center = 0;
    double variance = 0;
    double coordinate_variance = 0;
    double a_bar = 0;
};
LargeLambdaPrediction predict_large_lambda_limit(std::span<const double> beta_star,
                                                 std::optional<double> a_bar = std::nullopt);

// ---------------------------------------------------------------------------
// Monte Carlo

struct McOptions {
    std::vector<std::size_t> track;  // coordinates recorded per replicate; default {0, n-2, n-1}
    unsigned threads = 1;
};

struct McRecord {
    std::size_t replicate = 0;
    bool ok = false;
    std::string failure;
    std::vector<double> tracked;
    double err_l1 = 0, err_l2 = 0, err_linf = 0, rel_l2 = 0;
    double seconds = 0;
    int iterations = 0;
};

struct CoordinateSummary {
    std::size_t index = 0;
    double truth = 0;
    double mean = 0;
    double variance = 0;     // unbiased
    double skewness = 0;
    double excess_kurtosis = 0;
    double coverage95 = 0;   // |beta_hat - beta*| <= 1.96 / sqrt(D_ii), D_ii = sum_j sigma'
};

struct McAggregate {
    std::size_t successes = 0;
    std::size_t failures = 0;
    std::vector<CoordinateSummary> coords;
    std::vector<std::vector<double>> correlation;  // among tracked coordinates
    double mean_l1 = 0, mean_l2 = 0, mean_linf = 0, mean_rel_l2 = 0;
    double mean_seconds = 0, mean_iterations = 0;
};

struct McReport {
    std::size_t n = 0;
    std::string setting;
    double lambda = 0;
    std::uint64_t seed = 0;
    std::string generator = kGeneratorName;
    std::vector<McRecord> records;  // ordered by replicate
    McAggregate aggregate;
    std::vector<std::string> warnings;
};

// Replicate r draws from Rng(seed ^ r), fits, and records. Individual failures
// are kept; more than half failing throws MonteCarloError.
McReport run_mc(const SimScenario& scn, Penalty pen, std::size_t replicates, const FitConfig& cfg = {},
                const McOptions& opts = {});

McAggregate aggregate(std::span<const McRecord> records, std::span<const double> beta_star,
                      std::span<const std::size_t> track);

// One row per replicate: lambda, replicate, ok, iterations, seconds, err_l1,
// err_l2, err_linf, rel_l2, beta_<k> per tracked coordinate.
void write_mc_csv(std::ostream& out, const McReport& report, std::span<const std::size_t> track,
                  bool header = true);

// key=value lines: n, setting, seed, lambda (comma list), replicates, b, track.
struct ScenarioFile {
    SimScenario scenario;
    std::vector<double> lambdas;
    std::size_t replicates = 100;
    std::vector<std::size_t> track;
};
ScenarioFile parse_scenario_file(std::istream& in);

}  // namespace betafit
