#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "xvatree/discounting.hpp"
#include "xvatree/lattice.hpp"
#include "xvatree/payoff.hpp"

namespace xvatree {

struct NodeValue {
    double value = 0.0;
    /// Rate applied when discounting into this node; NaN at expiry.
    double effective_rate = std::numeric_limits<double>::quiet_NaN();
    bool exercised = false;
};

struct ValuedTree {
    double fair_value = 0.0;
    std::optional<double> riskfree_value;
    /// levels[i][j] for step i and up-count j; empty unless requested.
    std::vector<std::vector<NodeValue>> levels;
};

struct RollbackOptions {
    bool keep_tree = true;
    /// When set, a companion rollback discounting at this rate fills
    /// ValuedTree::riskfree_value.
    std::optional<double> riskfree_rate;
};

namespace detail {

inline void check_horizon(const Lattice& lattice, const Portfolio& portfolio) {
    check_portfolio(portfolio);
    const double t = lattice.spec().expiry;
    if (std::abs(t - portfolio.expiry) > 1e-12 * std::max(1.0, t))
        throw std::invalid_argument("lattice horizon does not match portfolio expiry");
    if (portfolio.has_american()) {
        for (const auto& leg : portfolio.legs) {
            if (leg.exercise != Exercise::american || leg.quantity <= 0.0)
                throw std::invalid_argument(
                    "american exercise requires every leg to be an american right held by B");
        }
    }
}

inline std::vector<double> terminal_layer(const Lattice& lattice, const Portfolio& portfolio) {
    const int n = lattice.steps();
    std::vector<double> values(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j) values[j] = terminal_payoff(portfolio, lattice.price_unchecked(n, j));
    return values;
}

/// One backward step: E = p V_up + (1-p) V_down, discounted at the rate
/// picked by the sign of E.
inline NodeValue step_node(double expected, const TwoSidedDiscount& rates, double dt) {
    const double rate = rate_for(rates, expected);
    return {expected * std::exp(-rate * dt), rate, false};
}

inline double roll_value(const Lattice& lattice, const Portfolio& portfolio,
                         const TwoSidedDiscount& rates,
                         std::vector<std::vector<NodeValue>>* levels) {
    const int n = lattice.steps();
    const double p = lattice.up_prob();
    const double dt = lattice.dt();
    const bool american = portfolio.has_american();

    std::vector<double> values = terminal_layer(lattice, portfolio);
    if (levels) {
        levels->assign(static_cast<std::size_t>(n) + 1, {});
        auto& last = (*levels)[n];
        last.reserve(values.size());
        for (double v : values) last.push_back({v, std::numeric_limits<double>::quiet_NaN(), false});
    }
    for (int i = n - 1; i >= 0; --i) {
        std::vector<NodeValue>* level = nullptr;
        if (levels) {
            level = &(*levels)[i];
            level->resize(static_cast<std::size_t>(i) + 1);
        }
        for (int j = 0; j <= i; ++j) {
            const double expected = p * values[j + 1] + (1.0 - p) * values[j];
            NodeValue node = step_node(expected, rates, dt);
            if (american) {
                const double intrinsic = exercise_value(portfolio, lattice.price_unchecked(i, j));
                if (intrinsic > node.value) {
                    node.value = intrinsic;
                    node.exercised = true;
                }
            }
            values[j] = node.value;
            if (level) (*level)[j] = node;
        }
    }
    return values[0];
}

}  // namespace detail

/// Backward induction under the given discount mode.
inline ValuedTree rollback(const Lattice& lattice, const Portfolio& portfolio,
                           const DiscountMode& mode, const RollbackOptions& options = {}) {
    detail::check_horizon(lattice, portfolio);
    const TwoSidedDiscount rates = resolve(mode);
    ValuedTree tree;
    tree.fair_value =
        detail::roll_value(lattice, portfolio, rates, options.keep_tree ? &tree.levels : nullptr);
    if (options.riskfree_rate) {
        const TwoSidedDiscount rf{*options.riskfree_rate, *options.riskfree_rate};
        tree.riskfree_value = detail::roll_value(lattice, portfolio, rf, nullptr);
    }
    return tree;
}

inline double price(const Lattice& lattice, const Portfolio& portfolio, const DiscountMode& mode) {
    detail::check_horizon(lattice, portfolio);
    return detail::roll_value(lattice, portfolio, resolve(mode), nullptr);
}

/// Delta from the two step-one nodes; a cross-check for bumped delta only.
inline double node_delta(const Lattice& lattice, const ValuedTree& tree) {
    if (tree.levels.size() < 2) throw std::invalid_argument("node delta needs a kept tree");
    const auto& level = tree.levels[1];
    return (level[1].value - level[0].value) /
           (lattice.price_unchecked(1, 1) - lattice.price_unchecked(1, 0));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

enum class VanillaKind { call, put };

/// Black-Scholes value with the stock drifting at the repo rate and the
/// payoff discounted at a separate derivative financing rate.
inline double closed_form_vanilla(double spot, double strike, double sigma, double expiry,
                                  double repo_rate, double dividend_yield, double discount_rate,
                                  VanillaKind kind) {
    if (!(spot > 0.0) || !(strike > 0.0) || !(sigma > 0.0) || !(expiry > 0.0))
        throw std::domain_error("spot, strike, volatility and expiry must be positive");
    const double vol_sqrt_t = sigma * std::sqrt(expiry);
    const double forward = spot * std::exp((repo_rate - dividend_yield) * expiry);
    const double d1 = (std::log(spot / strike) + (repo_rate - dividend_yield + 0.5 * sigma * sigma) * expiry) /
                      vol_sqrt_t;
    const double d2 = d1 - vol_sqrt_t;
    const double df = std::exp(-discount_rate * expiry);
    if (kind == VanillaKind::call) return df * (forward * normal_cdf(d1) - strike * normal_cdf(d2));
    return df * (strike * normal_cdf(-d2) - forward * normal_cdf(-d1));
}

struct Greeks {
    double delta = 0.0;
    double gamma = 0.0;
    double vega = 0.0;  // per 1.00 of volatility
};

/// Bump sizes; zero selects the defaults ds = 1e-4 S0, dsigma = 1e-4.
struct GreekBumps {
    double ds = 0.0;
    double dsigma = 0.0;
};

/// Central bump-and-reprice Greeks. Each bump rebuilds the lattice.
/// The default spot bump is one node spacing, S0(u - 1): the lattice price is
/// piecewise linear in S0 between node crossings, so a smaller bump returns the
/// slope of one linear piece rather than the delta.
inline Greeks greeks(const LatticeSpec& spec, const Portfolio& portfolio, const DiscountMode& mode,
                     GreekBumps bumps = {}) {
    if (bumps.ds < 0.0 || bumps.dsigma < 0.0) throw std::invalid_argument("bump sizes must be positive");
    const Lattice lattice(spec);
    const double ds = bumps.ds > 0.0 ? bumps.ds : spec.spot * (lattice.up_factor() - 1.0);
    const double dsigma = bumps.dsigma > 0.0 ? bumps.dsigma : 1e-4;
    if (!(spec.spot - ds > 0.0)) throw std::invalid_argument("spot bump exceeds spot");
    if (!(spec.sigma - dsigma > 0.0)) throw std::invalid_argument("volatility bump exceeds volatility");

    auto reprice = [&](double spot, double sigma) {
        LatticeSpec s = spec;
        s.spot = spot;
        s.sigma = sigma;
        return price(Lattice(s), portfolio, mode);
    };
    const double base = price(lattice, portfolio, mode);
    const double up = reprice(spec.spot + ds, spec.sigma);
    const double down = reprice(spec.spot - ds, spec.sigma);
    const double vol_up = reprice(spec.spot, spec.sigma + dsigma);
    const double vol_down = reprice(spec.spot, spec.sigma - dsigma);

    Greeks g;
    g.delta = (up - down) / (2.0 * ds);
    g.gamma = (up - 2.0 * base + down) / (ds * ds);
    g.vega = (vol_up - vol_down) / (2.0 * dsigma);
    return g;
}

}  // namespace xvatree
