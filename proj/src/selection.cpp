#include "betafit/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "betafit/errors.hpp"
#include "betafit/model.hpp"

namespace betafit {

void SelectionConfig::validate() const {
    if (!(zeta0 > 0 && zeta0 < 1)) throw InputError("zeta0 must lie in (0,1)");
    if (!(threshold_scale > 0) || !std::isfinite(threshold_scale)) throw InputError("threshold scale must be positive");
}

std::vector<std::size_t> middle_band(const DegreeSequence& d, double zeta0) {
    const std::size_t n = d.n();
    if (n == 0) return {};
    std::vector<std::int64_t> sorted = d.degrees;
    std::sort(sorted.begin(), sorted.end());
    const double tail = 0.5 * (1.0 - zeta0) * static_cast<double>(n);
    auto lo_rank = static_cast<std::size_t>(std::floor(tail));
    auto hi_rank = static_cast<std::size_t>(std::ceil(static_cast<double>(n) - tail));
    lo_rank = std::min(lo_rank, n - 1);
    hi_rank = std::clamp<std::size_t>(hi_rank, lo_rank + 1, n);
    const std::int64_t lo = sorted[lo_rank];
    const std::int64_t hi = sorted[hi_rank - 1];
    std::vector<std::size_t> band;
    for (std::size_t i = 0; i < n; ++i)
        if (d.degrees[i] >= lo && d.degrees[i] <= hi) band.push_back(i);
    return band;
}

SelectionResult select(const FitResult& fit, const EdgeList& g, const SelectionConfig& cfg) {
    cfg.validate();
    const std::size_t n = g.n;
    if (fit.beta_hat.size() != n) throw InputError("fit and graph differ in node count");
    if (n < 2) throw SelectionError("selection needs at least two nodes");

    const DegreeSequence d = degrees_of(g);
    const auto band = middle_band(d, cfg.zeta0);
    if (band.size() < 2) throw SelectionError("middle degree band has fewer than two nodes");
    std::vector<char> in_band(n, 0);
    for (auto i : band) in_band[i] = 1;
    std::size_t inside = 0;
    for (const auto& e : g.edges)
        if (in_band[e.u] && in_band[e.v]) ++inside;
    const double pairs = 0.5 * static_cast<double>(band.size()) * static_cast<double>(band.size() - 1);

    SelectionResult res;
    res.band_size = band.size();
    res.a_bar = static_cast<double>(inside) / pairs;
    if (res.a_bar <= 0.0 || res.a_bar >= 1.0)
        throw SelectionError("middle-band density is " + std::to_string(res.a_bar) + "; its logit is undefined");
    res.b_hat = res.a_bar * (1.0 - res.a_bar);
    res.center = cfg.center_mode == CenterMode::half_logit ? 0.5 * logit(res.a_bar) : logit(res.a_bar);

    if (cfg.qhat_mode == QhatMode::dmax) {
        res.q_hat_inv = static_cast<double>(d.max_degree()) / static_cast<double>(n - 1);
    } else {
        const DegreeHistogram hist = build_histogram(d);
        if (static_cast<std::size_t>(fit.delta_hat.size()) == hist.m())
            res.q_hat_inv = 1.0 / diagnostics(hist, fit.delta_hat).q_n;
        else
            res.q_hat_inv = 1.0 / diagnostics(fit.beta_hat).q_n;
    }

    const double nn = static_cast<double>(n);
    const double radical = std::sqrt(res.q_hat_inv * std::log(nn) / nn);
    const double factor = cfg.threshold_form == ThresholdForm::theory ? 1.0 / res.b_hat : res.b_hat;
    res.threshold = cfg.threshold_scale * factor * radical;

    for (std::size_t j = 0; j < n; ++j)
        if (std::abs(fit.beta_hat[j] - res.center) > res.threshold) res.active_set.push_back(j);
    return res;
}

}  // namespace betafit
