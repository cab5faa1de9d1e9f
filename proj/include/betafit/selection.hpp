#pragma once

#include <cstddef>
#include <vector>

#include "betafit/graph_io.hpp"
#include "betafit/solver.hpp"

namespace betafit {

enum class CenterMode {
    half_logit,  // logit(A_bar) / 2: the common value that reproduces density A_bar
    full_logit,  // logit(A_bar)
};

enum class ThresholdForm {
    theory,   // C * (1 / b_hat) * sqrt(q_hat_inv * log n / n)
    literal,  // C * sqrt(q_hat_inv * log n / (b_hat^-2 * n)) = C * b_hat * sqrt(...)
};

enum class QhatMode {
    dmax,            // d_max / (n - 1)
    exact_from_fit,  // 1 / q_n evaluated at the fitted beta
};

struct SelectionConfig {
    double zeta0 = 0.5;  // share of nodes in the middle degree band
    double threshold_scale = 1.0;
    CenterMode center_mode = CenterMode::half_logit;
    ThresholdForm threshold_form = ThresholdForm::theory;
    QhatMode qhat_mode = QhatMode::dmax;

    void validate() const;  // throws InputError
};

struct SelectionResult {
    std::vector<std::size_t> active_set;  // ascending node indices
    double center = 0;
    double threshold = 0;
    double a_bar = 0;  // edge density induced by the middle band
    double b_hat = 0;  // a_bar * (1 - a_bar)
    double q_hat_inv = 0;
    std::size_t band_size = 0;
};

// Nodes in the middle zeta0 band of the degree order, widened so that a
// degree class is either wholly inside or wholly outside.
std::vector<std::size_t> middle_band(const DegreeSequence& d, double zeta0);

// Thresholds |beta_hat_j - center|. Throws SelectionError when the band
// density is 0 or 1 or the band has fewer than two nodes.
SelectionResult select(const FitResult& fit, const EdgeList& g, const SelectionConfig& cfg = {});

}  // namespace betafit
