#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "xvatree/discounting.hpp"
#include "xvatree/lattice.hpp"
#include "xvatree/market.hpp"
#include "xvatree/payoff.hpp"
#include "xvatree/pricer.hpp"

namespace xvatree {

enum class XvaMethod { recursive, rate_shift };

/// Counterparty risk adjustment split into credit and funding parts for
/// each party. All four components are reported as magnitudes so that
/// cva + cfa - dva - dfa = cra.
struct XvaBreakdown {
    double fair_value = 0.0;
    double riskfree_value = 0.0;
    double cra = 0.0;
    double cva = 0.0;
    double cfa = 0.0;
    double dva = 0.0;
    double dfa = 0.0;
    XvaMethod method = XvaMethod::recursive;

    double conservation_residual() const { return (cva + cfa - dva - dfa) - cra; }

    double relative_conservation_residual() const {
        const double scale = std::max({std::abs(riskfree_value), std::abs(fair_value),
                                       std::abs(cva) + std::abs(cfa) + std::abs(dva) + std::abs(dfa)});
        const double r = std::abs(conservation_residual());
        return scale > 0.0 ? r / scale : r;
    }
};

inline double cra(double riskfree_value, double fair_value) { return riskfree_value - fair_value; }

struct XvaOptions {
    /// Ignore collateral entirely (eta = 0 for both parties), matching the
    /// pure-asset uncollateralized form of the cva/fva integrals.
    bool strict_uncollateralized = false;
};

namespace detail {

/// Exact integral over one step of e^{-(spread) (s - t1)} ds, i.e. the
/// accrual time of the funding spread when V* accretes at the riskfree rate
/// and the adjustment is discounted at the effective rate. Tends to dt as the
/// spread vanishes.
inline double accrual_time(double spread, double dt) {
    const double x = spread * dt;
    if (std::abs(x) < 1e-300) return dt;
    return -std::expm1(-x) / spread;
}

inline CollateralScheme scheme_for(const CollateralScheme& scheme, const XvaOptions& options) {
    return options.strict_uncollateralized ? CollateralScheme::uncollateralized() : scheme;
}

inline void reject_american(const Portfolio& portfolio) {
    if (portfolio.has_american())
        throw std::invalid_argument("on-tree xva accumulation supports european legs only");
}

}  // namespace detail

/// Rolls the switching value, the riskfree value and the four adjustment
/// components back together on one lattice. Each interior node adds
///   spread_k * V* * accrual_time(r_e - r, dt)
/// for the components active on its sign, and discounts the children's
/// components at the node's own effective rate.
inline XvaBreakdown xva_on_tree(const Lattice& lattice, const Portfolio& portfolio,
                                const PartyRates& rates, const CollateralScheme& scheme_in,
                                const XvaOptions& options = {}) {
    detail::check_horizon(lattice, portfolio);
    detail::reject_american(portfolio);
    const CollateralScheme scheme = detail::scheme_for(scheme_in, options);

    const double r = rates.ois_rate;
    const double asset_rate = effective_rate(ValueSign::asset_to_b, rates, scheme);
    const double liability_rate = effective_rate(ValueSign::liability_to_b, rates, scheme);

    const double chi_c = chi_value(scheme.chi_c);
    const double chi_b = chi_value(scheme.chi_b);
    const double cva_spread = (rates.unsecured_c - rates.liquidity_c) * (1.0 - scheme.eta_c);
    const double cfa_spread =
        (rates.liquidity_c - r) * (1.0 - scheme.eta_c) +
        scheme.eta_c * ((1.0 - chi_c) * (rates.liquidity_c - r) + chi_c * (rates.collateral_rate - r));
    const double dva_spread = (rates.unsecured_b - rates.liquidity_b) * (1.0 - scheme.eta_b);
    const double dfa_spread =
        (rates.liquidity_b - r) * (1.0 - scheme.eta_b) +
        scheme.eta_b * ((1.0 - chi_b) * (rates.liquidity_b - r) + chi_b * (rates.collateral_rate - r));

    const int n = lattice.steps();
    const double p = lattice.up_prob();
    const double q = 1.0 - p;
    const double dt = lattice.dt();
    const double riskfree_df = std::exp(-r * dt);
    const double asset_df = std::exp(-asset_rate * dt);
    const double liability_df = std::exp(-liability_rate * dt);
    const double asset_accrual = detail::accrual_time(asset_rate - r, dt);
    const double liability_accrual = detail::accrual_time(liability_rate - r, dt);

    std::vector<double> value = detail::terminal_layer(lattice, portfolio);
    std::vector<double> riskfree = value;
    const std::size_t width = value.size();
    std::vector<double> cva(width, 0.0), cfa(width, 0.0), dva(width, 0.0), dfa(width, 0.0);

    for (int i = n - 1; i >= 0; --i) {
        for (int j = 0; j <= i; ++j) {
            const double expected = p * value[j + 1] + q * value[j];
            const double expected_rf = p * riskfree[j + 1] + q * riskfree[j];
            const bool asset = sign_of(expected) == ValueSign::asset_to_b;
            const double df = asset ? asset_df : liability_df;
            const double v_star = expected_rf * riskfree_df;

            auto roll = [&](std::vector<double>& c) { return df * (p * c[j + 1] + q * c[j]); };
            double next_cva = roll(cva), next_cfa = roll(cfa);
            double next_dva = roll(dva), next_dfa = roll(dfa);
            if (asset) {
                next_cva += cva_spread * v_star * asset_accrual;
                next_cfa += cfa_spread * v_star * asset_accrual;
            } else {
                next_dva -= dva_spread * v_star * liability_accrual;
                next_dfa -= dfa_spread * v_star * liability_accrual;
            }
            value[j] = expected * df;
            riskfree[j] = v_star;
            cva[j] = next_cva;
            cfa[j] = next_cfa;
            dva[j] = next_dva;
            dfa[j] = next_dfa;
        }
    }

    XvaBreakdown out;
    out.method = XvaMethod::recursive;
    out.fair_value = value[0];
    out.riskfree_value = riskfree[0];
    out.cra = cra(out.riskfree_value, out.fair_value);
    out.cva = cva[0];
    out.cfa = cfa[0];
    out.dva = dva[0];
    out.dfa = dfa[0];
    return out;
}

/// Five rollbacks that move one rate block at a time from the riskfree rate
/// to the full effective rates: C's funding basis, C's credit spread, then
/// B's funding basis and B's credit spread.
inline XvaBreakdown xva_by_rate_shift(const Lattice& lattice, const Portfolio& portfolio,
                                      const PartyRates& rates, const CollateralScheme& scheme_in,
                                      const XvaOptions& options = {}) {
    detail::check_horizon(lattice, portfolio);
    const CollateralScheme scheme = detail::scheme_for(scheme_in, options);
    const double r = rates.ois_rate;

    PartyRates liquidity_only = rates;
    liquidity_only.unsecured_b = rates.liquidity_b;
    liquidity_only.unsecured_c = rates.liquidity_c;

    const double asset_liquidity = effective_rate(ValueSign::asset_to_b, liquidity_only, scheme);
    const double asset_full = effective_rate(ValueSign::asset_to_b, rates, scheme);
    const double liability_liquidity = effective_rate(ValueSign::liability_to_b, liquidity_only, scheme);
    const double liability_full = effective_rate(ValueSign::liability_to_b, rates, scheme);

    auto value_at = [&](double asset_rate, double liability_rate) {
        return detail::roll_value(lattice, portfolio, TwoSidedDiscount{asset_rate, liability_rate},
                                  nullptr);
    };
    const double v0 = value_at(r, r);
    const double v1 = value_at(asset_liquidity, r);
    const double v2 = value_at(asset_full, r);
    const double v3 = value_at(asset_full, liability_liquidity);
    const double v4 = value_at(asset_full, liability_full);

    XvaBreakdown out;
    out.method = XvaMethod::rate_shift;
    out.riskfree_value = v0;
    out.fair_value = v4;
    out.cra = cra(v0, v4);
    out.cfa = v0 - v1;
    out.cva = v1 - v2;
    out.dfa = v3 - v2;
    out.dva = v4 - v3;
    return out;
}

inline XvaBreakdown compute_xva(XvaMethod method, const Lattice& lattice, const Portfolio& portfolio,
                                const PartyRates& rates, const CollateralScheme& scheme,
                                const XvaOptions& options = {}) {
    return method == XvaMethod::recursive ? xva_on_tree(lattice, portfolio, rates, scheme, options)
                                          : xva_by_rate_shift(lattice, portfolio, rates, scheme, options);
}

/// Expected riskfree value E[V*(t_k)] at every step k = 0..n, sampled on a
/// uniform grid of width dt.
struct ExposureProfile {
    std::vector<double> expected;
    double dt = 0.0;

    double time(std::size_t k) const { return static_cast<double>(k) * dt; }
};

inline ExposureProfile riskfree_profile(const Lattice& lattice, const Portfolio& portfolio,
                                        double ois_rate) {
    ValuedTree tree = rollback(lattice, portfolio, RiskfreeDiscount{ois_rate});
    const int n = lattice.steps();
    const double p = lattice.up_prob();

    ExposureProfile profile;
    profile.dt = lattice.dt();
    profile.expected.resize(static_cast<std::size_t>(n) + 1);
    std::vector<double> prob{1.0};
    for (int i = 0; i <= n; ++i) {
        double sum = 0.0;
        for (int j = 0; j <= i; ++j) sum += prob[j] * tree.levels[i][j].value;
        profile.expected[i] = sum;
        std::vector<double> next(static_cast<std::size_t>(i) + 2, 0.0);
        for (int j = 0; j <= i; ++j) {
            next[j] += (1.0 - p) * prob[j];
            next[j + 1] += p * prob[j];
        }
        prob = std::move(next);
    }
    return profile;
}

/// Discounting applied to the practitioner funding integral.
enum class FvaDiscounting { riskfree_discount, own_survival, joint_survival };

/// sum_k spread * E[V*(t_k)] * dt * D(t_k) over the left endpoints of each
/// step, with D the riskfree discount optionally times B's or B's and C's
/// survival probability.
inline double practitioner_fva(const ExposureProfile& profile, double funding_spread,
                               FvaDiscounting convention, double ois_rate,
                               const CreditCurve& own = {}, const CreditCurve& counterparty = {}) {
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < profile.expected.size(); ++k) {
        const double t = profile.time(k);
        double d = std::exp(-ois_rate * t);
        switch (convention) {
            case FvaDiscounting::riskfree_discount: break;
            case FvaDiscounting::own_survival: d *= own.survival(t); break;
            case FvaDiscounting::joint_survival: d *= own.survival(t) * counterparty.survival(t); break;
            default: throw std::invalid_argument("unknown fva discounting convention");
        }
        total += funding_spread * profile.expected[k] * profile.dt * d;
    }
    return total;
}

namespace detail {

inline double default_weighted_sum(const ExposureProfile& profile, double loss_rate,
                                   const CreditCurve& counterparty, double ois_rate,
                                   const std::optional<CreditCurve>& own) {
    if (counterparty.survival_convention == SurvivalConvention::joint_survival && !own)
        throw std::invalid_argument("joint survival needs the reporting party's credit curve");
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < profile.expected.size(); ++k) {
        const double t = profile.time(k);
        double survival = counterparty.survival(t);
        if (counterparty.survival_convention == SurvivalConvention::joint_survival)
            survival *= own->survival(t);
        total += loss_rate * profile.expected[k] * std::exp(-ois_rate * t) * survival *
                 counterparty.hazard_rate * profile.dt;
    }
    return total;
}

}  // namespace detail

/// Reduced-form unilateral CVA: riskfree discounting times survival,
/// weighted by the loss given default.
inline double industry_cva(const ExposureProfile& profile, const CreditCurve& counterparty,
                           double ois_rate, const std::optional<CreditCurve>& own = std::nullopt) {
    return detail::default_weighted_sum(profile, 1.0 - counterparty.recovery, counterparty, ois_rate,
                                        own);
}

/// Companion FVA on the counterparty's bond-CDS basis, discounted the same
/// way as industry_cva. The basis multiplies the default density term as
/// written in the reduced-form comparison.
inline double industry_fva(const ExposureProfile& profile, double basis,
                           const CreditCurve& counterparty, double ois_rate,
                           const std::optional<CreditCurve>& own = std::nullopt) {
    return detail::default_weighted_sum(profile, basis, counterparty, ois_rate, own);
}

}  // namespace xvatree
