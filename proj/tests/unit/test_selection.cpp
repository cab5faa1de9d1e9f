#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "betafit/errors.hpp"
#include "betafit/selection.hpp"
#include "betafit/simulate.hpp"
#include "oracles.hpp"

using namespace betafit;

namespace {

EdgeList from_small(const oracle::SmallGraph& s) {
    std::vector<Edge> e;
    for (auto [u, v] : s.edges) e.push_back({u, v});
    return make_edge_list(s.n, e);
}

EdgeList random_edge_list(std::size_t n, double p, std::mt19937_64& gen) {
    for (;;) {
        auto s = oracle::random_graph(n, p, gen);
        bool ok = true;
        for (auto d : s.degrees) ok = ok && d > 0 && d < static_cast<std::int64_t>(n) - 1;
        if (ok) return from_small(s);
    }
}

FitResult fit_graph(const EdgeList& g, double lambda) {
    FitResult r = fit(build_histogram(degrees_of(g)), Penalty(lambda));
    EXPECT_TRUE(r.converged);
    return r;
}

}  // namespace

TEST(MiddleBand, DistinctDegrees) {
    DegreeSequence d;
    d.degrees = {5, 0, 9, 3, 7, 1, 8, 2, 6, 4};
    auto band = middle_band(d, 0.5);
    std::set<std::int64_t> degs;
    for (auto i : band) degs.insert(d.degrees[i]);
    // Ranks floor(2.5) .. ceil(7.5) - 1.
    EXPECT_EQ(degs, (std::set<std::int64_t>{2, 3, 4, 5, 6, 7}));
    EXPECT_TRUE(std::is_sorted(band.begin(), band.end()));
}

TEST(MiddleBand, KeepsDegreeClassesWhole) {
    DegreeSequence d;
    d.degrees = {1, 1, 1, 2, 2, 3, 3, 3};
    EXPECT_EQ(middle_band(d, 0.5).size(), 8u);
    d.degrees = {1, 1, 2, 2, 2, 2, 3, 3};
    auto band = middle_band(d, 0.5);
    EXPECT_EQ(band, (std::vector<std::size_t>{2, 3, 4, 5}));
    std::mt19937_64 gen(3);
    std::uniform_int_distribution<int> u(1, 6);
    for (int rep = 0; rep < 50; ++rep) {
        d.degrees.assign(30, 0);
        for (auto& x : d.degrees) x = u(gen);
        auto b = middle_band(d, 0.3 + 0.1 * (rep % 5));
        std::set<std::int64_t> in;
        for (auto i : b) in.insert(d.degrees[i]);
        std::size_t expect = 0;
        for (auto x : d.degrees) expect += in.count(x);
        EXPECT_EQ(b.size(), expect);
    }
}

TEST(Select, MatchesHandComputation) {
    std::mt19937_64 gen(21);
    auto g = random_edge_list(40, 0.3, gen);
    auto r = fit_graph(g, 0.0);
    auto d = degrees_of(g);
    auto band = middle_band(d, 0.5);
    std::set<std::size_t> in(band.begin(), band.end());
    double inside = 0;
    for (const auto& e : g.edges) inside += in.count(e.u) && in.count(e.v);
    const double nb = static_cast<double>(band.size());
    const double a = inside / (nb * (nb - 1) / 2);
    const double b = a * (1 - a);
    const double qinv = static_cast<double>(*std::max_element(d.degrees.begin(), d.degrees.end())) / 39.0;
    const double thr = (1 / b) * std::sqrt(qinv * std::log(40.0) / 40.0);
    const double center = 0.5 * std::log(a / (1 - a));

    SelectionResult s = select(r, g);
    EXPECT_DOUBLE_EQ(s.a_bar, a);
    EXPECT_DOUBLE_EQ(s.b_hat, b);
    EXPECT_NEAR(s.center, center, 1e-15);
    EXPECT_NEAR(s.threshold, thr, 1e-14);
    EXPECT_NEAR(s.q_hat_inv, qinv, 1e-15);
    EXPECT_EQ(s.band_size, band.size());
    std::vector<std::size_t> expect;
    for (std::size_t j = 0; j < 40; ++j)
        if (std::abs(r.beta_hat[j] - s.center) > s.threshold) expect.push_back(j);
    EXPECT_EQ(s.active_set, expect);
}

TEST(Select, AlternativeReadings) {
    std::mt19937_64 gen(22);
    auto g = random_edge_list(50, 0.2, gen);
    auto r = fit_graph(g, 0.1);
    SelectionResult base = select(r, g);
    SelectionConfig cfg;
    cfg.center_mode = CenterMode::full_logit;
    EXPECT_NEAR(select(r, g, cfg).center, 2 * base.center, 1e-14);
    cfg = {};
    cfg.threshold_form = ThresholdForm::literal;
    EXPECT_NEAR(select(r, g, cfg).threshold, base.threshold * base.b_hat * base.b_hat, 1e-14);
    cfg = {};
    cfg.qhat_mode = QhatMode::exact_from_fit;
    EXPECT_NEAR(select(r, g, cfg).q_hat_inv, 1.0 / diagnostics(r.beta_hat).q_n, 1e-12);
}

TEST(Select, UnionOfDegreeClasses) {
    std::mt19937_64 gen(23);
    for (int rep = 0; rep < 10; ++rep) {
        auto g = random_edge_list(60, 0.15, gen);
        auto r = fit_graph(g, 0.0);
        SelectionConfig cfg;
        cfg.threshold_scale = 0.05;
        auto s = select(r, g, cfg);
        auto d = degrees_of(g);
        std::set<std::int64_t> selected;
        for (auto j : s.active_set) selected.insert(d.degrees[j]);
        std::size_t expect = 0;
        for (auto x : d.degrees) expect += selected.count(x);
        EXPECT_EQ(s.active_set.size(), expect);
    }
}

TEST(Select, MonotoneInThresholdScale) {
    std::mt19937_64 gen(24);
    auto g = random_edge_list(80, 0.1, gen);
    auto r = fit_graph(g, 0.0);
    std::vector<std::size_t> prev(80);
    std::iota(prev.begin(), prev.end(), 0);
    for (double c : {0.01, 0.05, 0.1, 0.3, 1.0, 3.0}) {
        SelectionConfig cfg;
        cfg.threshold_scale = c;
        auto s = select(r, g, cfg);
        EXPECT_TRUE(std::includes(prev.begin(), prev.end(), s.active_set.begin(), s.active_set.end()));
        prev = s.active_set;
    }
}

TEST(Select, InvariantToRelabeling) {
    std::mt19937_64 gen(25);
    auto g = random_edge_list(50, 0.2, gen);
    std::vector<std::uint32_t> perm(50);
    std::iota(perm.begin(), perm.end(), 0u);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<Edge> e;
    for (const auto& x : g.edges) e.push_back({perm[x.u], perm[x.v]});
    auto h = make_edge_list(50, e);
    SelectionConfig cfg;
    cfg.threshold_scale = 0.1;
    auto a = select(fit_graph(g, 0.0), g, cfg);
    auto b = select(fit_graph(h, 0.0), h, cfg);
    std::vector<std::size_t> mapped;
    for (auto j : a.active_set) mapped.push_back(perm[j]);
    std::sort(mapped.begin(), mapped.end());
    EXPECT_EQ(mapped, b.active_set);
    EXPECT_EQ(a.a_bar, b.a_bar);
}

TEST(Select, Errors) {
    // Star: the middle band holds only leaves, which share no edges.
    std::vector<Edge> star;
    for (std::uint32_t i = 1; i < 8; ++i) star.push_back({0, i});
    auto g = make_edge_list(8, star);
    FitResult r;
    r.beta_hat.assign(8, 0.0);
    EXPECT_THROW(select(r, g), SelectionError);
    r.beta_hat.assign(7, 0.0);
    EXPECT_THROW(select(r, g), InputError);
    SelectionConfig cfg;
    cfg.zeta0 = 1.0;
    EXPECT_THROW(cfg.validate(), InputError);
    cfg.zeta0 = 0.5;
    cfg.threshold_scale = 0;
    EXPECT_THROW(cfg.validate(), InputError);
}

TEST(Select, ConstantBetaSelectsAlmostNothing) {
    const std::size_t n = 400;
    std::size_t selected = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        SimScenario scn;
        scn.n = n;
        scn.beta.assign(n, -0.1 * std::log(static_cast<double>(n)));
        scn.seed = 1000 + static_cast<std::uint64_t>(rep);
        auto g = sample_network(scn);
        auto r = fit(build_histogram(degrees_of(g)), Penalty(0.0));
        ASSERT_TRUE(r.converged);
        selected += select(r, g).active_set.size();
    }
    EXPECT_LE(static_cast<double>(selected) / (reps * static_cast<double>(n)), 0.01);
}

TEST(Select, DetectsDeviationsInBothDirections) {
    SimScenario scn;
    scn.n = 400;
    scn.setting = Setting::simu2_1;
    scn.seed = 77;
    auto g = sample_network(scn);
    auto r = fit(build_histogram(degrees_of(g)), Penalty(0.0));
    ASSERT_TRUE(r.converged);
    auto s = select(r, g);
    auto truth = active_set(scn);
    std::size_t up = 0, down = 0;
    for (auto j : s.active_set) {
        if (j < 40) ++up;
        else if (j < 80) ++down;
    }
    EXPECT_GE(up, 36u);
    EXPECT_GE(down, 36u);
    std::vector<std::size_t> diff;
    std::set_symmetric_difference(s.active_set.begin(), s.active_set.end(), truth.begin(), truth.end(),
                                  std::back_inserter(diff));
    EXPECT_LE(static_cast<double>(diff.size()) / 400.0, 0.05);
}
