#pragma once

#include <cmath>
#include <stdexcept>
#include <variant>

#include "xvatree/market.hpp"

namespace xvatree {

/// Sign of a value from party B's perspective.
enum class ValueSign { asset_to_b, liability_to_b };

/// Effective derivative financing rate for one side of the trade.
///
/// When the value is an asset to B, the exposure is a liability of C and is
/// financed at C's rates: the uncollateralized part at r_c, the collateralized
/// part at mu_c if segregated or at the collateral rate if commingled. The
/// liability branch is the mirror image on B's rates.
inline double effective_rate(ValueSign sign, const PartyRates& rates,
                             const CollateralScheme& scheme) {
    if (sign == ValueSign::asset_to_b) {
        const double eta = scheme.eta_c;
        const double chi = chi_value(scheme.chi_c);
        return rates.unsecured_c * (1.0 - eta) +
               eta * ((1.0 - chi) * rates.liquidity_c + chi * rates.collateral_rate);
    }
    const double eta = scheme.eta_b;
    const double chi = chi_value(scheme.chi_b);
    return rates.unsecured_b * (1.0 - eta) +
           eta * ((1.0 - chi) * rates.liquidity_b + chi * rates.collateral_rate);
}

/// A zero value is treated as a liability of B.
inline ValueSign sign_of(double value) {
    return value > 0.0 ? ValueSign::asset_to_b : ValueSign::liability_to_b;
}

/// The discount factor is positive, so the sign of the discounted value equals
/// the sign of the expected continuation and the rate can be picked up front.
inline double switching_rate_from_expectation(double expected_continuation,
                                              const PartyRates& rates,
                                              const CollateralScheme& scheme) {
    if (!std::isfinite(expected_continuation))
        throw std::domain_error("expected continuation value is not finite");
    return effective_rate(sign_of(expected_continuation), rates, scheme);
}

inline double discount_factor(double rate, double dt) {
    if (!(dt >= 0.0)) throw std::domain_error("year fraction must be nonnegative");
    return std::exp(-rate * dt);
}

/// Discount at the scheme-dependent rate of whichever party owes the value.
struct SwitchingDiscount {
    PartyRates rates;
    CollateralScheme scheme;
};

/// One flat rate regardless of sign.
struct ConstantDiscount {
    double rate = 0.0;
};

/// Discount at the OIS rate.
struct RiskfreeDiscount {
    double ois_rate = 0.0;
};

/// Explicit pair of rates for asset and liability nodes. Used by the
/// rate-shift decomposition to move one party's rates at a time.
struct TwoSidedDiscount {
    double asset_rate = 0.0;
    double liability_rate = 0.0;
};

using DiscountMode =
    std::variant<SwitchingDiscount, ConstantDiscount, RiskfreeDiscount, TwoSidedDiscount>;

/// Every mode reduces to a rate for each sign.
inline TwoSidedDiscount resolve(const DiscountMode& mode) {
    struct Visitor {
        TwoSidedDiscount operator()(const SwitchingDiscount& m) const {
            return {effective_rate(ValueSign::asset_to_b, m.rates, m.scheme),
                    effective_rate(ValueSign::liability_to_b, m.rates, m.scheme)};
        }
        TwoSidedDiscount operator()(const ConstantDiscount& m) const { return {m.rate, m.rate}; }
        TwoSidedDiscount operator()(const RiskfreeDiscount& m) const {
            return {m.ois_rate, m.ois_rate};
        }
        TwoSidedDiscount operator()(const TwoSidedDiscount& m) const { return m; }
    };
    const TwoSidedDiscount r = std::visit(Visitor{}, mode);
    if (!std::isfinite(r.asset_rate) || !std::isfinite(r.liability_rate))
        throw std::domain_error("discount rate is not finite");
    return r;
}

inline double rate_for(const TwoSidedDiscount& rates, double expected_continuation) {
    return sign_of(expected_continuation) == ValueSign::asset_to_b ? rates.asset_rate
                                                                    : rates.liability_rate;
}

}  // namespace xvatree
