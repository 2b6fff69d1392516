#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace xvatree {

/// Flat, continuously compounded annual rates seen by the two parties.
/// Party B is the reporting party ("us"), party C the counterparty.
struct PartyRates {
    double ois_rate = 0.0;         // riskfree benchmark
    double collateral_rate = 0.0;  // earned on commingled cash collateral
    double repo_rate = 0.0;        // stock financing rate, drives the drift
    double dividend_yield = 0.0;
    double unsecured_b = 0.0;
    double unsecured_c = 0.0;
    double liquidity_b = 0.0;
    double liquidity_c = 0.0;
};

enum class SurvivalConvention { own_survival, joint_survival };

struct CreditCurve {
    double hazard_rate = 0.0;
    double recovery = 0.0;
    SurvivalConvention survival_convention = SurvivalConvention::own_survival;

    double survival(double t) const { return std::exp(-hazard_rate * t); }
};

enum class Segregation { segregated = 0, commingled = 1 };

/// Collateralized fraction per party and whether that collateral is
/// segregated (credit protection only) or commingled (protection + funding).
struct CollateralScheme {
    double eta_b = 0.0;
    double eta_c = 0.0;
    Segregation chi_b = Segregation::commingled;
    Segregation chi_c = Segregation::commingled;

    static constexpr CollateralScheme uncollateralized() { return {}; }
};

inline double chi_value(Segregation s) { return s == Segregation::commingled ? 1.0 : 0.0; }

/// Funding rate of a stock position financed partly unsecured (haircut h)
/// and partly through repo.
inline double blended_funding_rate(double haircut, double unsecured, double repo) {
    if (!(haircut >= 0.0 && haircut <= 1.0))
        throw std::domain_error("haircut must lie in [0, 1]");
    if (!std::isfinite(unsecured) || !std::isfinite(repo))
        throw std::domain_error("rates must be finite");
    return haircut * unsecured + (1.0 - haircut) * repo;
}

/// Liquidity rate: unsecured bond rate stripped of the CDS premium.
inline double liquidity_rate_from_basis(double unsecured, double cds_premium) {
    if (!(cds_premium >= 0.0))
        throw std::domain_error("CDS premium must be nonnegative");
    if (!std::isfinite(unsecured) || !std::isfinite(cds_premium))
        throw std::domain_error("rates must be finite");
    return unsecured - cds_premium;
}

struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;

    bool ok() const { return errors.empty(); }
    bool empty() const { return errors.empty() && warnings.empty(); }
    friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

inline ValidationReport validate(const PartyRates& rates, const CreditCurve& curve,
                                 const CollateralScheme& scheme) {
    ValidationReport report;
    auto& err = report.errors;
    auto& warn = report.warnings;

    const std::pair<const char*, double> named[] = {
        {"ois_rate", rates.ois_rate},       {"collateral_rate", rates.collateral_rate},
        {"repo_rate", rates.repo_rate},     {"dividend_yield", rates.dividend_yield},
        {"unsecured_b", rates.unsecured_b}, {"unsecured_c", rates.unsecured_c},
        {"liquidity_b", rates.liquidity_b}, {"liquidity_c", rates.liquidity_c},
    };
    bool finite = true;
    for (const auto& [name, value] : named) {
        if (!std::isfinite(value)) {
            err.push_back(std::string(name) + " is not finite");
            finite = false;
        }
    }
    if (finite) {
        if (rates.liquidity_b > rates.unsecured_b)
            err.push_back("liquidity rate exceeds unsecured rate for party B");
        if (rates.liquidity_c > rates.unsecured_c)
            err.push_back("liquidity rate exceeds unsecured rate for party C");
        // The bond-CDS basis mu - r is normally positive.
        if (rates.ois_rate > rates.liquidity_b)
            warn.push_back("ois_rate exceeds liquidity rate of party B");
        if (rates.ois_rate > rates.liquidity_c)
            warn.push_back("ois_rate exceeds liquidity rate of party C");
        if (rates.collateral_rate > rates.liquidity_b || rates.collateral_rate > rates.liquidity_c)
            warn.push_back("collateral_rate exceeds a liquidity rate");
    }

    if (!(curve.hazard_rate >= 0.0) || !std::isfinite(curve.hazard_rate))
        err.push_back("hazard_rate must be finite and nonnegative");
    if (!(curve.recovery >= 0.0 && curve.recovery <= 1.0))
        err.push_back("recovery must lie in [0, 1]");

    if (!(scheme.eta_b >= 0.0 && scheme.eta_b <= 1.0))
        err.push_back("eta_b must lie in [0, 1]");
    if (!(scheme.eta_c >= 0.0 && scheme.eta_c <= 1.0))
        err.push_back("eta_c must lie in [0, 1]");
    return report;
}

}  // namespace xvatree
