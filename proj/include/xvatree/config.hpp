#pragma once

#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "xvatree/discounting.hpp"
#include "xvatree/lattice.hpp"
#include "xvatree/market.hpp"
#include "xvatree/payoff.hpp"
#include "xvatree/pde.hpp"
#include "xvatree/pricer.hpp"
#include "xvatree/xva.hpp"

namespace xvatree {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DiscountKind { switching, constant, riskfree };

struct EngineConfig {
    int steps = 100;
    DiscountKind discount = DiscountKind::switching;
    double constant_rate = 0.0;
    XvaMethod xva_method = XvaMethod::recursive;
    bool strict_uncollateralized = false;
    GridSpec grid;
    GreekBumps bumps;
    std::vector<int> converge_steps{16, 64, 256, 512};
};

struct RunConfig {
    double spot = 0.0;
    double volatility = 0.0;
    PartyRates rates;
    std::optional<CreditCurve> credit_c;
    std::optional<CreditCurve> credit_b;
    CollateralScheme scheme;
    Portfolio portfolio;
    EngineConfig engine;
    std::vector<std::string> warnings;

    LatticeSpec lattice_spec() const {
        return {spot, volatility, rates.repo_rate, rates.dividend_yield, portfolio.expiry, engine.steps};
    }

    PdeProblem pde_problem() const { return {spot, volatility, rates.repo_rate, rates.dividend_yield}; }

    DiscountMode discount_mode() const {
        switch (engine.discount) {
            case DiscountKind::constant: return ConstantDiscount{engine.constant_rate};
            case DiscountKind::riskfree: return RiskfreeDiscount{rates.ois_rate};
            case DiscountKind::switching: break;
        }
        return SwitchingDiscount{rates, scheme};
    }
};

namespace detail {

using nlohmann::json;

inline void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
}

inline void allow_keys(const json& j, const std::string& where,
                       std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed) known = known || item.key() == k;
        if (!known) throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
}

inline double number(const json& j, const char* key, const std::string& where,
                     std::optional<double> fallback = std::nullopt) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError("missing key '" + std::string(key) + "' in " + where);
    }
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError("'" + std::string(key) + "' in " + where + " must be a number");
    return v.get<double>();
}

inline std::string text(const json& j, const char* key, const std::string& where,
                        std::optional<std::string> fallback = std::nullopt) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError("missing key '" + std::string(key) + "' in " + where);
    }
    const json& v = j.at(key);
    if (!v.is_string()) throw ConfigError("'" + std::string(key) + "' in " + where + " must be a string");
    return v.get<std::string>();
}

inline Segregation parse_segregation(const json& j, const char* key) {
    if (!j.contains(key)) return Segregation::commingled;
    const json& v = j.at(key);
    if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1))
        return v.get<int>() == 0 ? Segregation::segregated : Segregation::commingled;
    if (v.is_string()) {
        if (v == "segregated") return Segregation::segregated;
        if (v == "commingled") return Segregation::commingled;
    }
    throw ConfigError("'" + std::string(key) + "' in scheme must be 0, 1, \"segregated\" or \"commingled\"");
}

inline CreditCurve parse_curve(const json& j, const std::string& where) {
    require_object(j, where);
    allow_keys(j, where, {"hazard_rate", "recovery", "survival_convention"});
    CreditCurve c;
    c.hazard_rate = number(j, "hazard_rate", where);
    c.recovery = number(j, "recovery", where);
    const std::string conv = text(j, "survival_convention", where, "own_survival");
    if (conv == "own_survival") c.survival_convention = SurvivalConvention::own_survival;
    else if (conv == "joint_survival") c.survival_convention = SurvivalConvention::joint_survival;
    else throw ConfigError("unknown survival_convention '" + conv + "'");
    return c;
}

inline PayoffLeg parse_leg(const json& j, std::size_t index) {
    const std::string where = "portfolio.legs[" + std::to_string(index) + "]";
    require_object(j, where);
    allow_keys(j, where, {"kind", "strike", "quantity", "exercise"});
    PayoffLeg leg;
    const std::string kind = text(j, "kind", where);
    if (kind == "call") leg.kind = LegKind::call;
    else if (kind == "put") leg.kind = LegKind::put;
    else if (kind == "forward") leg.kind = LegKind::forward;
    else if (kind == "fixed_cash") leg.kind = LegKind::fixed_cash;
    else throw ConfigError("unknown leg kind '" + kind + "' in " + where);
    leg.strike = number(j, "strike", where, leg.kind == LegKind::fixed_cash ? std::optional(0.0) : std::nullopt);
    leg.quantity = number(j, "quantity", where);
    const std::string ex = text(j, "exercise", where, "european");
    if (ex == "european") leg.exercise = Exercise::european;
    else if (ex == "american") leg.exercise = Exercise::american;
    else throw ConfigError("unknown exercise '" + ex + "' in " + where);
    return leg;
}

inline void parse_engine(const json& j, EngineConfig& e) {
    require_object(j, "engine");
    allow_keys(j, "engine", {"steps", "discount", "xva_method", "strict_uncollateralized", "grid",
                             "bumps", "converge_steps"});
    if (j.contains("steps")) {
        if (!j.at("steps").is_number_integer()) throw ConfigError("engine.steps must be an integer");
        e.steps = j.at("steps").get<int>();
    }
    if (j.contains("discount")) {
        const json& d = j.at("discount");
        require_object(d, "engine.discount");
        allow_keys(d, "engine.discount", {"mode", "rate"});
        const std::string mode = text(d, "mode", "engine.discount");
        if (mode == "switching") e.discount = DiscountKind::switching;
        else if (mode == "riskfree") e.discount = DiscountKind::riskfree;
        else if (mode == "constant") {
            e.discount = DiscountKind::constant;
            e.constant_rate = number(d, "rate", "engine.discount");
        } else throw ConfigError("unknown discount mode '" + mode + "'");
        if (mode != "constant" && d.contains("rate"))
            throw ConfigError("engine.discount.rate is only valid with mode \"constant\"");
    }
    if (j.contains("xva_method")) {
        const std::string m = text(j, "xva_method", "engine");
        if (m == "recursive") e.xva_method = XvaMethod::recursive;
        else if (m == "rate_shift" || m == "rate-shift") e.xva_method = XvaMethod::rate_shift;
        else throw ConfigError("unknown xva_method '" + m + "'");
    }
    if (j.contains("strict_uncollateralized")) {
        if (!j.at("strict_uncollateralized").is_boolean())
            throw ConfigError("engine.strict_uncollateralized must be a boolean");
        e.strict_uncollateralized = j.at("strict_uncollateralized").get<bool>();
    }
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        require_object(g, "engine.grid");
        allow_keys(g, "engine.grid", {"s_max_multiple", "space_steps", "time_steps", "scheme"});
        e.grid.s_max_multiple = number(g, "s_max_multiple", "engine.grid", 0.0);
        e.grid.space_steps = static_cast<int>(number(g, "space_steps", "engine.grid", 400));
        e.grid.time_steps = static_cast<int>(number(g, "time_steps", "engine.grid", 400));
        const std::string s = text(g, "scheme", "engine.grid", "crank_nicolson");
        if (s == "crank_nicolson") e.grid.scheme = TimeScheme::crank_nicolson;
        else if (s == "explicit") e.grid.scheme = TimeScheme::explicit_euler;
        else throw ConfigError("unknown grid scheme '" + s + "'");
        if (e.grid.space_steps < 4 || e.grid.time_steps < 4)
            throw ConfigError("engine.grid needs at least 4 space and 4 time steps");
    }
    if (j.contains("bumps")) {
        const json& b = j.at("bumps");
        require_object(b, "engine.bumps");
        allow_keys(b, "engine.bumps", {"ds", "dsigma"});
        e.bumps.ds = number(b, "ds", "engine.bumps", 0.0);
        e.bumps.dsigma = number(b, "dsigma", "engine.bumps", 0.0);
        if (e.bumps.ds < 0.0 || e.bumps.dsigma < 0.0) throw ConfigError("bump sizes must be positive");
    }
    if (j.contains("converge_steps")) {
        const json& c = j.at("converge_steps");
        if (!c.is_array() || c.empty()) throw ConfigError("engine.converge_steps must be a non-empty array");
        e.converge_steps.clear();
        for (const auto& n : c) {
            if (!n.is_number_integer() || n.get<int>() < 1)
                throw ConfigError("engine.converge_steps entries must be positive integers");
            e.converge_steps.push_back(n.get<int>());
        }
    }
    if (e.steps < 1) throw ConfigError("engine.steps must be at least 1");
}

}  // namespace detail

/// Parses and validates a run configuration. Throws ConfigError with a
/// single-line diagnostic.
inline RunConfig parse_config(const nlohmann::json& root) {
    using namespace detail;
    require_object(root, "config");
    allow_keys(root, "config", {"market", "scheme", "portfolio", "engine"});
    if (!root.contains("market")) throw ConfigError("missing section 'market'");
    if (!root.contains("portfolio")) throw ConfigError("missing section 'portfolio'");

    RunConfig cfg;
    const json& m = root.at("market");
    require_object(m, "market");
    allow_keys(m, "market", {"spot", "volatility", "ois_rate", "collateral_rate", "repo_rate",
                             "dividend_yield", "unsecured_b", "unsecured_c", "liquidity_b",
                             "liquidity_c", "credit_c", "credit_b"});
    cfg.spot = number(m, "spot", "market");
    cfg.volatility = number(m, "volatility", "market");
    auto& r = cfg.rates;
    r.ois_rate = number(m, "ois_rate", "market", 0.0);
    r.collateral_rate = number(m, "collateral_rate", "market", r.ois_rate);
    r.repo_rate = number(m, "repo_rate", "market", 0.0);
    r.dividend_yield = number(m, "dividend_yield", "market", 0.0);
    r.unsecured_b = number(m, "unsecured_b", "market", r.ois_rate);
    r.unsecured_c = number(m, "unsecured_c", "market", r.ois_rate);
    r.liquidity_b = number(m, "liquidity_b", "market", r.unsecured_b);
    r.liquidity_c = number(m, "liquidity_c", "market", r.unsecured_c);
    if (m.contains("credit_c")) cfg.credit_c = parse_curve(m.at("credit_c"), "market.credit_c");
    if (m.contains("credit_b")) cfg.credit_b = parse_curve(m.at("credit_b"), "market.credit_b");
    if (!(cfg.spot > 0.0)) throw ConfigError("market.spot must be positive");
    if (!(cfg.volatility > 0.0)) throw ConfigError("market.volatility must be positive");

    if (root.contains("scheme")) {
        const json& s = root.at("scheme");
        require_object(s, "scheme");
        allow_keys(s, "scheme", {"eta_b", "eta_c", "chi_b", "chi_c"});
        cfg.scheme.eta_b = number(s, "eta_b", "scheme", 0.0);
        cfg.scheme.eta_c = number(s, "eta_c", "scheme", 0.0);
        cfg.scheme.chi_b = parse_segregation(s, "chi_b");
        cfg.scheme.chi_c = parse_segregation(s, "chi_c");
    }

    const json& p = root.at("portfolio");
    require_object(p, "portfolio");
    allow_keys(p, "portfolio", {"expiry", "legs"});
    cfg.portfolio.expiry = number(p, "expiry", "portfolio");
    if (p.contains("legs")) {
        const json& legs = p.at("legs");
        if (!legs.is_array()) throw ConfigError("portfolio.legs must be an array");
        for (std::size_t i = 0; i < legs.size(); ++i) cfg.portfolio.legs.push_back(parse_leg(legs[i], i));
    }
    try {
        check_portfolio(cfg.portfolio);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("portfolio: ") + e.what());
    }

    if (root.contains("engine")) parse_engine(root.at("engine"), cfg.engine);

    const ValidationReport report = validate(cfg.rates, cfg.credit_c.value_or(CreditCurve{}), cfg.scheme);
    if (cfg.credit_b) {
        const ValidationReport own = validate(cfg.rates, *cfg.credit_b, cfg.scheme);
        if (!own.ok()) throw ConfigError("market.credit_b: " + own.errors.front());
    }
    if (!report.ok()) throw ConfigError(report.errors.front());
    cfg.warnings = report.warnings;
    return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    return parse_config(root);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

}  // namespace xvatree
