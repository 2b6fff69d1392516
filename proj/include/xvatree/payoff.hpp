#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace xvatree {

enum class LegKind { call, put, forward, fixed_cash };
enum class Exercise { european, american };

/// One vanilla leg of a netting set. Positive quantity means party B is long.
struct PayoffLeg {
    LegKind kind = LegKind::call;
    double strike = 0.0;  // ignored for fixed_cash
    double quantity = 1.0;
    Exercise exercise = Exercise::european;

    /// Payoff of one unit of the leg at underlying price s.
    double unit_payoff(double s) const {
        switch (kind) {
            case LegKind::call: return std::max(s - strike, 0.0);
            case LegKind::put: return std::max(strike - s, 0.0);
            case LegKind::forward: return s - strike;
            case LegKind::fixed_cash: return 1.0;
        }
        return 0.0;
    }

    double payoff(double s) const { return quantity * unit_payoff(s); }
};

inline PayoffLeg call_leg(double strike, double quantity = 1.0,
                          Exercise exercise = Exercise::european) {
    return {LegKind::call, strike, quantity, exercise};
}
inline PayoffLeg put_leg(double strike, double quantity = 1.0,
                         Exercise exercise = Exercise::european) {
    return {LegKind::put, strike, quantity, exercise};
}
inline PayoffLeg forward_leg(double strike, double quantity = 1.0) {
    return {LegKind::forward, strike, quantity, Exercise::european};
}
inline PayoffLeg fixed_cash_leg(double quantity) {
    return {LegKind::fixed_cash, 0.0, quantity, Exercise::european};
}

/// A single netting set on one underlying with a common expiry.
struct Portfolio {
    std::vector<PayoffLeg> legs;
    double expiry = 0.0;

    bool has_american() const {
        return std::any_of(legs.begin(), legs.end(),
                           [](const PayoffLeg& l) { return l.exercise == Exercise::american; });
    }

    Portfolio scaled(double c) const {
        Portfolio out = *this;
        for (auto& leg : out.legs) leg.quantity *= c;
        return out;
    }
};

/// Throws std::invalid_argument when a leg or the expiry breaks an invariant.
inline void check_portfolio(const Portfolio& portfolio) {
    if (!(portfolio.expiry > 0.0)) throw std::invalid_argument("portfolio expiry must be positive");
    for (const auto& leg : portfolio.legs) {
        if (leg.kind != LegKind::fixed_cash && !(leg.strike > 0.0))
            throw std::invalid_argument("strike must be positive for call, put and forward legs");
        if (leg.quantity == 0.0 || !std::isfinite(leg.quantity))
            throw std::invalid_argument("leg quantity must be finite and nonzero");
        if (leg.exercise == Exercise::american &&
            (leg.kind == LegKind::forward || leg.kind == LegKind::fixed_cash))
            throw std::invalid_argument("american exercise is only valid for calls and puts");
    }
}

/// Sum of signed leg payoffs at expiry.
inline double terminal_payoff(const Portfolio& portfolio, double s_terminal) {
    double total = 0.0;
    for (const auto& leg : portfolio.legs) total += leg.payoff(s_terminal);
    return total;
}

/// Value received by B when exercising every american leg at s.
inline double exercise_value(const Portfolio& portfolio, double s) {
    double total = 0.0;
    for (const auto& leg : portfolio.legs)
        if (leg.exercise == Exercise::american) total += leg.payoff(s);
    return total;
}

}  // namespace xvatree
