#include "betafit/simulate.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "betafit/errors.hpp"
#include "betafit/model.hpp"
#include "betafit/parallel.hpp"

namespace betafit {

namespace {

struct SettingName {
    Setting setting;
    const char* name;
};

constexpr SettingName kSettings[] = {
    {Setting::explicit_beta, "explicit"}, {Setting::i, "i"},           {Setting::ii, "ii"},
    {Setting::iii, "iii"},                {Setting::iv, "iv"},         {Setting::v, "v"},
    {Setting::vi, "vi"},                  {Setting::simu2_1, "simu2-1"}, {Setting::simu2_2, "simu2-2"},
    {Setting::aic_dense, "aic-dense"},    {Setting::aic_sparse, "aic-sparse"}, {Setting::gof, "gof"},
};

// (gamma, alpha) of the two-block settings.
std::pair<double, double> two_block(Setting s) {
    switch (s) {
        case Setting::i: return {-1.0 / 3, 1.0 / 5};
        case Setting::ii: return {-1.0 / 2, 1.0 / 5};
        case Setting::iii:
        case Setting::iv:
        case Setting::v: return {-2.0 / 3, 1.0 / 3};
        case Setting::vi: return {-1.0 / 3, -1.0 / 3 + 0.05};
        default: return {0, 0};
    }
}

}  // namespace

Setting parse_setting(const std::string& name) {
    for (const auto& s : kSettings)
        if (name == s.name) return s.setting;
    throw InputError("unknown setting \"" + name + "\"");
}

std::string setting_name(Setting s) {
    for (const auto& e : kSettings)
        if (e.setting == s) return e.name;
    return "unknown";
}

std::vector<double> beta_star(const SimScenario& scn) {
    const std::size_t n = scn.n;
    if (scn.setting == Setting::explicit_beta) {
        if (scn.beta.size() != n) throw InputError("explicit beta has the wrong length");
        for (double b : scn.beta)
            if (!std::isfinite(b)) throw InputError("explicit beta must be finite");
        return scn.beta;
    }
    if (n < 2) throw InputError("scenario needs n >= 2");
    const double L = std::log(static_cast<double>(n));
    std::vector<double> beta(n);
    auto fill = [&](std::size_t lo, std::size_t hi, double v) {
        for (std::size_t i = lo; i < std::min(hi, n); ++i) beta[i] = v;
    };
    switch (scn.setting) {
        case Setting::i:
        case Setting::ii:
        case Setting::iii:
        case Setting::iv:
        case Setting::v:
        case Setting::vi: {
            auto [g, a] = two_block(scn.setting);
            fill(0, n / 5, g * L);
            fill(n / 5, n, a * L);
            break;
        }
        case Setting::simu2_1: {
            const double base = -0.2 * L / 2;
            fill(0, n, base);
            fill(0, n / 10, base + 0.4 * L);
            fill(n / 10, n / 5, base - 0.4 * L);
            break;
        }
        case Setting::simu2_2: {
            const double base = -0.6 * L / 2;
            fill(0, n, base);
            fill(0, n / 20, base + 0.2 * L);
            fill(n / 20, n / 10, base - 0.2 * L);
            break;
        }
        case Setting::aic_dense:
            fill(0, n / 10, -L / 5);
            fill(n / 10, n, L / 2);
            break;
        case Setting::aic_sparse:
            fill(0, n / 3, -L / 3);
            fill(n / 3, n, (-1.0 / 3 + 0.05) * L);
            break;
        case Setting::gof: {
            const auto split = static_cast<std::size_t>(std::floor(0.4 * static_cast<double>(n)));
            fill(0, split, scn.b * L);
            fill(split, n, 0.1 * L);
            break;
        }
        case Setting::explicit_beta: break;
    }
    return beta;
}

std::optional<double> recommended_lambda(Setting s, std::size_t n) {
    switch (s) {
        case Setting::i:
        case Setting::ii:
        case Setting::iii: return 0.1;
        case Setting::iv: return 10.0;
        case Setting::v: return 200.0;
        case Setting::vi: return 2.0 * static_cast<double>(n);
        default: return std::nullopt;
    }
}

std::vector<std::size_t> active_set(const SimScenario& scn) {
    std::size_t upto = 0;
    if (scn.setting == Setting::simu2_1) upto = scn.n / 5;
    else if (scn.setting == Setting::simu2_2) upto = scn.n / 10;
    std::vector<std::size_t> s(upto);
    for (std::size_t i = 0; i < upto; ++i) s[i] = i;
    return s;
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

constexpr std::size_t kBlock = 1024;
constexpr double kSparse = 0.01;

template <class Emit>
void sample_pairs(std::span<const double> beta, Rng& rng, Emit&& emit) {
    const std::size_t n = beta.size();
    if (n < 2) return;
    double max_abs = 0;
    for (double b : beta) {
        if (!std::isfinite(b)) throw InputError("beta must be finite");
        max_abs = std::max(max_abs, std::abs(b));
    }
    // With |beta| < 300, e^{b_i} e^{b_j} stays finite and the pair
    // probability is one multiply and one divide.
    const bool fast = max_abs < 300.0;
    std::vector<double> w;
    if (fast) {
        w.resize(n);
        for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(beta[i]);
    }
    auto prob = [&](std::size_t i, std::size_t j) {
        if (fast) {
            const double t = w[i] * w[j];
            return t / (1.0 + t);
        }
        return sigmoid(beta[i] + beta[j]);
    };

    std::vector<double> suffix_max(n + 1, -std::numeric_limits<double>::infinity());
    for (std::size_t j = n; j-- > 0;) suffix_max[j] = std::max(suffix_max[j + 1], beta[j]);
    const std::size_t blocks = (n + kBlock - 1) / kBlock;
    std::vector<double> block_max(blocks, -std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < n; ++j) block_max[j / kBlock] = std::max(block_max[j / kBlock], beta[j]);

    // Pairs (i, j) for j in [lo, hi), every probability bounded by p.
    auto skip_range = [&](std::size_t i, std::size_t lo, std::size_t hi, double p) {
        if (p <= 0.0) return;
        const double log1m = std::log1p(-p);
        std::size_t j = lo;
        for (;;) {
            const std::uint64_t s = rng.geometric_skip(log1m);
            if (s >= hi - j) return;
            j += static_cast<std::size_t>(s);
            if (rng.uniform() * p < prob(i, j)) emit(i, j);
            if (++j >= hi) return;
        }
    };

    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double row_max = sigmoid(beta[i] + suffix_max[i + 1]);
        if (row_max < kSparse) {
            skip_range(i, i + 1, n, row_max);
            continue;
        }
        for (std::size_t j = i + 1; j < n;) {
            const std::size_t b = j / kBlock;
            const std::size_t end = std::min(n, (b + 1) * kBlock);
            const double pb = sigmoid(beta[i] + block_max[b]);
            if (pb < kSparse) {
                skip_range(i, j, end, pb);
            } else {
                for (std::size_t k = j; k < end; ++k)
                    if (rng.uniform() < prob(i, k)) emit(i, k);
            }
            j = end;
        }
    }
}

}  // namespace

EdgeList sample_network(std::span<const double> beta, Rng& rng) {
    if (beta.size() > std::numeric_limits<std::uint32_t>::max()) throw InputError("too many nodes");
    EdgeList g;
    g.n = beta.size();
    // Emission order is (i ascending, j ascending), already the canonical order.
    sample_pairs(beta, rng, [&](std::size_t i, std::size_t j) {
        g.edges.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
    });
    return g;
}

EdgeList sample_network(const SimScenario& scn) {
    const auto beta = beta_star(scn);
    Rng rng(scn.seed);
    return sample_network(beta, rng);
}

std::vector<std::int64_t> sample_degrees(std::span<const double> beta, Rng& rng) {
    std::vector<std::int64_t> d(beta.size(), 0);
    sample_pairs(beta, rng, [&](std::size_t i, std::size_t j) {
        ++d[i];
        ++d[j];
    });
    return d;
}

double expected_density(std::span<const double> beta) {
    const std::size_t n = beta.size();
    if (n < 2) throw InputError("density needs n >= 2");
    long double s = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) s += sigmoid(beta[i] + beta[j]);
    return static_cast<double>(s / (0.5L * n * (n - 1)));
}

LargeLambdaPrediction predict_large_lambda_limit(std::span<const double> beta, std::optional<double> a_bar) {
    const std::size_t n = beta.size();
    if (n < 2) throw InputError("prediction needs n >= 2");
    LargeLambdaPrediction out;
    out.a_bar = a_bar ? *a_bar : expected_density(beta);
    if (!(out.a_bar > 0.0 && out.a_bar < 1.0)) throw InputError("density must lie strictly between 0 and 1");
    const double L = logit(out.a_bar);
    long double sum_v = 0, sum_vx = 0, sum_var = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double x = beta[i] + beta[j];
            const double den = L - x;
            const double v = std::abs(den) < 1e-9 ? sigmoid_prime(x) : (out.a_bar - sigmoid(x)) / den;
            sum_v += v;
            sum_vx += static_cast<long double>(v) * x;
            sum_var += sigmoid_prime(x);
        }
    }
    // 1'M1 = 4 sum_{i<j} M_ij when M_ii = sum_{j != i} M_ij.
    const long double one_v_one = 4 * sum_v;
    const long double one_vstar_one = 4 * sum_var;
    const long double nn = static_cast<long double>(n);
    out.center = static_cast<double>(sum_vx / (2 * sum_v));
    out.variance = static_cast<double>(nn * (nn - 1) * one_vstar_one / (2 * one_v_one * one_v_one));
    out.coordinate_variance = static_cast<double>(out.variance / (nn * (nn - 1) / 2));
    return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo

McAggregate aggregate(std::span<const McRecord> records, std::span<const double> beta,
                      std::span<const std::size_t> track) {
    McAggregate agg;
    std::vector<const McRecord*> ok;
    for (const auto& r : records) {
        if (r.ok) ok.push_back(&r);
        else ++agg.failures;
    }
    agg.successes = ok.size();
    const std::size_t k = track.size();
    agg.coords.resize(k);
    agg.correlation.assign(k, std::vector<double>(k, std::numeric_limits<double>::quiet_NaN()));
    if (ok.empty()) return agg;
    const double cnt = static_cast<double>(ok.size());

    for (const auto* r : ok) {
        agg.mean_l1 += r->err_l1;
        agg.mean_l2 += r->err_l2;
        agg.mean_linf += r->err_linf;
        agg.mean_rel_l2 += r->rel_l2;
        agg.mean_seconds += r->seconds;
        agg.mean_iterations += r->iterations;
    }
    agg.mean_l1 /= cnt;
    agg.mean_l2 /= cnt;
    agg.mean_linf /= cnt;
    agg.mean_rel_l2 /= cnt;
    agg.mean_seconds /= cnt;
    agg.mean_iterations /= cnt;

    std::vector<std::vector<double>> centered(k, std::vector<double>(ok.size()));
    for (std::size_t c = 0; c < k; ++c) {
        auto& s = agg.coords[c];
        const std::size_t idx = track[c];
        s.index = idx;
        s.truth = beta[idx];
        double d_ii = 0;
        for (std::size_t j = 0; j < beta.size(); ++j)
            if (j != idx) d_ii += sigmoid_prime(beta[idx] + beta[j]);
        const double half_width = 1.959963984540054 / std::sqrt(d_ii);

        long double sum = 0;
        std::size_t covered = 0;
        for (const auto* r : ok) {
            sum += r->tracked[c];
            if (std::abs(r->tracked[c] - s.truth) <= half_width) ++covered;
        }
        s.mean = static_cast<double>(sum / cnt);
        s.coverage95 = static_cast<double>(covered) / cnt;
        long double m2 = 0, m3 = 0, m4 = 0;
        for (std::size_t t = 0; t < ok.size(); ++t) {
            const double d = ok[t]->tracked[c] - s.mean;
            centered[c][t] = d;
            m2 += d * d;
            m3 += static_cast<long double>(d) * d * d;
            m4 += static_cast<long double>(d) * d * d * d;
        }
        s.variance = ok.size() > 1 ? static_cast<double>(m2 / (cnt - 1)) : 0.0;
        m2 /= cnt;
        m3 /= cnt;
        m4 /= cnt;
        if (m2 > 0) {
            s.skewness = static_cast<double>(m3 / std::pow(m2, 1.5L));
            s.excess_kurtosis = static_cast<double>(m4 / (m2 * m2) - 3);
        }
    }
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            long double sab = 0, saa = 0, sbb = 0;
            for (std::size_t t = 0; t < ok.size(); ++t) {
                sab += static_cast<long double>(centered[a][t]) * centered[b][t];
                saa += static_cast<long double>(centered[a][t]) * centered[a][t];
                sbb += static_cast<long double>(centered[b][t]) * centered[b][t];
            }
            if (saa > 0 && sbb > 0) agg.correlation[a][b] = static_cast<double>(sab / std::sqrt(saa * sbb));
        }
    }
    return agg;
}

McReport run_mc(const SimScenario& scn, Penalty pen, std::size_t replicates, const FitConfig& cfg,
                const McOptions& opts) {
    if (replicates == 0) throw InputError("replicates must be >= 1");
    cfg.validate();
    const auto beta = beta_star(scn);
    const std::size_t n = beta.size();
    std::vector<std::size_t> track = opts.track;
    if (track.empty()) track = {0, n - 2, n - 1};
    for (auto t : track)
        if (t >= n) throw InputError("tracked coordinate " + std::to_string(t) + " out of range");

    double norm_star = 0;
    for (double b : beta) norm_star += b * b;
    norm_star = std::sqrt(norm_star);

    McReport rep;
    rep.n = n;
    rep.setting = setting_name(scn.setting);
    rep.lambda = pen.lambda;
    rep.seed = scn.seed;
    rep.records.resize(replicates);

    parallel_for(replicates, std::max(1u, opts.threads), [&](std::size_t r) {
        McRecord& rec = rep.records[r];
        rec.replicate = r;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            Rng rng(scn.seed ^ static_cast<std::uint64_t>(r));
            const auto degrees = sample_degrees(beta, rng);
            const auto hist = DegreeHistogram::build(degrees);
            FitResult f = fit(hist, pen, cfg);
            rec.iterations = f.iterations;
            if (!f.converged) throw DivergedError("not converged", f.iterations);
            double l1 = 0, l2 = 0, linf = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double e = std::abs(f.beta_hat[i] - beta[i]);
                l1 += e;
                l2 += e * e;
                linf = std::max(linf, e);
            }
            rec.err_l1 = l1;
            rec.err_l2 = std::sqrt(l2);
            rec.err_linf = linf;
            rec.rel_l2 = norm_star > 0 ? rec.err_l2 / norm_star : std::numeric_limits<double>::quiet_NaN();
            for (auto t : track) rec.tracked.push_back(f.beta_hat[t]);
            rec.ok = true;
        } catch (const Error& e) {
            rec.failure = e.what();
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });

    rep.aggregate = aggregate(rep.records, beta, track);
    if (2 * rep.aggregate.failures > replicates) {
        std::string first;
        for (const auto& r : rep.records)
            if (!r.ok) {
                first = r.failure;
                break;
            }
        throw MonteCarloError(std::to_string(rep.aggregate.failures) + " of " + std::to_string(replicates) +
                              " replicates failed; first failure: " + first);
    }

    // Numerical readings of the asymptotic-normality conditions; advisory only.
    const auto diag = diagnostics(beta);
    const double nn = static_cast<double>(n);
    const double cond1 = std::pow(diag.b_n, 3) / (std::pow(diag.q_n, 2.5) * std::sqrt(nn)) * std::log(nn);
    const double lhs2 = (1.0 / diag.c_n) / (1.0 / diag.c_n + (nn - 2) / diag.b_n) * std::log(nn);
    const double rhs2 = diag.q_n * diag.q_n / (diag.b_n * diag.b_n);
    char buf[256];
    if (cond1 > 1.0) {
        std::snprintf(buf, sizeof buf, "b_n^3 log n / (q_n^2.5 sqrt n) = %.3g is not small; normal approximation doubtful",
                      cond1);
        rep.warnings.emplace_back(buf);
    }
    if (lhs2 > rhs2) {
        std::snprintf(buf, sizeof buf, "variance-ratio condition fails (%.3g > %.3g); normal approximation doubtful", lhs2,
                      rhs2);
        rep.warnings.emplace_back(buf);
    }
    if (rep.aggregate.failures > 0)
        rep.warnings.push_back(std::to_string(rep.aggregate.failures) + " replicate(s) failed");
    return rep;
}

void write_mc_csv(std::ostream& out, const McReport& report, std::span<const std::size_t> track, bool header) {
    if (header) {
        out << "lambda,replicate,ok,iterations,seconds,err_l1,err_l2,err_linf,rel_l2";
        for (auto t : track) out << ",beta_" << t;
        out << '\n';
    }
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    };
    for (const auto& r : report.records) {
        out << num(report.lambda) << ',';
        out << r.replicate << ',' << (r.ok ? "true" : "false") << ',' << r.iterations << ',' << num(r.seconds);
        out << ',' << num(r.err_l1) << ',' << num(r.err_l2) << ',' << num(r.err_linf) << ',' << num(r.rel_l2);
        for (std::size_t c = 0; c < track.size(); ++c) {
            out << ',';
            if (r.ok) out << num(r.tracked[c]);
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Scenario files

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& text, std::size_t line) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ParseError("\"" + text + "\" is not a valid number", line);
    return value;
}

template <class T>
std::vector<T> parse_list(const std::string& text, std::size_t line) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(trim(item), line));
    if (out.empty()) throw ParseError("empty list", line);
    return out;
}

}  // namespace

ScenarioFile parse_scenario_file(std::istream& in) {
    ScenarioFile sf;
    bool have_n = false, have_setting = false;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "n") {
            sf.scenario.n = parse_number<std::size_t>(value, line_no);
            have_n = true;
        } else if (key == "setting") {
            sf.scenario.setting = parse_setting(value);
            have_setting = true;
        } else if (key == "seed") {
            sf.scenario.seed = parse_number<std::uint64_t>(value, line_no);
        } else if (key == "lambda") {
            sf.lambdas = parse_list<double>(value, line_no);
        } else if (key == "replicates") {
            sf.replicates = parse_number<std::size_t>(value, line_no);
        } else if (key == "b") {
            sf.scenario.b = parse_number<double>(value, line_no);
        } else if (key == "track") {
            sf.track = parse_list<std::size_t>(value, line_no);
        } else if (key == "beta") {
            sf.scenario.beta = parse_list<double>(value, line_no);
        } else {
            throw ParseError("unknown key \"" + key + "\"", line_no);
        }
    }
    if (!have_setting) throw ParseError("scenario file lacks a setting");
    if (sf.scenario.setting == Setting::explicit_beta && !have_n) sf.scenario.n = sf.scenario.beta.size();
    else if (!have_n) throw ParseError("scenario file lacks n");
    if (sf.lambdas.empty()) {
        if (auto lam = recommended_lambda(sf.scenario.setting, sf.scenario.n)) sf.lambdas = {*lam};
        else throw ParseError("scenario file lacks lambda");
    }
    if (sf.replicates == 0) throw ParseError("replicates must be >= 1");
    return sf;
}

}  // namespace betafit
