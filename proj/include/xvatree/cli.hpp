#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "xvatree/config.hpp"
#include "xvatree/pde.hpp"
#include "xvatree/pricer.hpp"
#include "xvatree/tree_io.hpp"
#include "xvatree/xva.hpp"

namespace xvatree::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_config_error = 2,
    exit_numerical_failure = 3,
    exit_check_failed = 4,
};

enum class Command { price, xva, tree, converge };

struct Options {
    std::string config_path;
    bool json = false;
    std::optional<XvaMethod> method;
    std::optional<int> steps;
    std::string out_path;
};

/// Flat JSON object writer; numbers always carry 17 significant digits.
class JsonObject {
public:
    JsonObject& number(const std::string& key, double value) {
        return raw(key, std::isfinite(value) ? format_number(value) : std::string("null"));
    }
    JsonObject& integer(const std::string& key, long long value) { return raw(key, std::to_string(value)); }
    JsonObject& boolean(const std::string& key, bool value) { return raw(key, value ? "true" : "false"); }
    JsonObject& string(const std::string& key, const std::string& value) {
        return raw(key, "\"" + value + "\"");
    }
    JsonObject& raw(const std::string& key, const std::string& json) {
        fields_.emplace_back(key, json);
        return *this;
    }
    std::string str() const {
        std::string s = "{";
        for (std::size_t i = 0; i < fields_.size(); ++i) {
            if (i) s += ",";
            s += "\"" + fields_[i].first + "\":" + fields_[i].second;
        }
        return s + "}";
    }

private:
    std::vector<std::pair<std::string, std::string>> fields_;
};

inline std::string json_array(const std::vector<std::string>& items) {
    std::string s = "[";
    for (std::size_t i = 0; i < items.size(); ++i) s += (i ? "," : "") + items[i];
    return s + "]";
}

inline std::string fixed(double x, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

inline std::string sci(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
}

inline void row(std::ostream& out, const std::string& label, const std::string& value) {
    std::string padded = label;
    if (padded.size() < 18) padded.resize(18, ' ');
    out << "  " << padded << value << '\n';
}

inline const char* method_name(XvaMethod m) { return m == XvaMethod::recursive ? "recursive" : "rate_shift"; }

inline int cmd_price(const RunConfig& cfg, const Options& opt, std::ostream& out) {
    const Lattice lattice(cfg.lattice_spec());
    const DiscountMode mode = cfg.discount_mode();
    RollbackOptions ro;
    ro.keep_tree = false;
    ro.riskfree_rate = cfg.rates.ois_rate;
    const ValuedTree tree = rollback(lattice, cfg.portfolio, mode, ro);
    const Greeks g = greeks(cfg.lattice_spec(), cfg.portfolio, mode, cfg.engine.bumps);
    const double rf = *tree.riskfree_value;

    if (opt.json) {
        out << JsonObject()
                   .number("fair_value", tree.fair_value)
                   .number("riskfree_value", rf)
                   .number("cra", cra(rf, tree.fair_value))
                   .number("delta", g.delta)
                   .number("gamma", g.gamma)
                   .number("vega", g.vega)
                   .str()
            << '\n';
        return exit_ok;
    }
    out << "price (" << lattice.steps() << " steps, up probability " << fixed(lattice.up_prob(), 4) << ")\n";
    row(out, "fair value", fixed(tree.fair_value));
    row(out, "riskfree value", fixed(rf));
    row(out, "CRA", fixed(cra(rf, tree.fair_value)));
    row(out, "delta", fixed(g.delta));
    row(out, "gamma", fixed(g.gamma));
    row(out, "vega", fixed(g.vega));
    return exit_ok;
}

inline int cmd_xva(const RunConfig& cfg, const Options& opt, std::ostream& out) {
    const Lattice lattice(cfg.lattice_spec());
    const XvaMethod method = opt.method.value_or(cfg.engine.xva_method);
    XvaOptions xo;
    xo.strict_uncollateralized = cfg.engine.strict_uncollateralized;
    const XvaBreakdown x = compute_xva(method, lattice, cfg.portfolio, cfg.rates, cfg.scheme, xo);

    std::optional<double> ind_cva, ind_fva;
    if (cfg.credit_c) {
        const ExposureProfile profile = riskfree_profile(lattice, cfg.portfolio, cfg.rates.ois_rate);
        ind_cva = industry_cva(profile, *cfg.credit_c, cfg.rates.ois_rate, cfg.credit_b);
        ind_fva = industry_fva(profile, cfg.rates.liquidity_c - cfg.rates.ois_rate, *cfg.credit_c,
                               cfg.rates.ois_rate, cfg.credit_b);
    }

    if (opt.json) {
        JsonObject o;
        o.string("method", method_name(method))
            .number("fair_value", x.fair_value)
            .number("riskfree_value", x.riskfree_value)
            .number("cra", x.cra)
            .number("cva", x.cva)
            .number("cfa", x.cfa)
            .number("dva", x.dva)
            .number("dfa", x.dfa)
            .number("conservation_residual", x.conservation_residual());
        if (ind_cva) o.number("industry_cva", *ind_cva).number("industry_fva", *ind_fva);
        out << o.str() << '\n';
        return exit_ok;
    }
    out << "xva (party B perspective, method " << method_name(method) << ", " << lattice.steps()
        << " steps)\n";
    row(out, "final prc", fixed(x.fair_value));
    row(out, "riskfree prc", fixed(x.riskfree_value));
    row(out, "cva", fixed(x.cva));
    row(out, "cfa", fixed(x.cfa));
    row(out, "dva", fixed(x.dva));
    row(out, "dfa", fixed(x.dfa));
    row(out, "CRA", fixed(x.cra));
    row(out, "conservation", sci(x.conservation_residual()));
    if (ind_cva) {
        row(out, "industry CVA", fixed(*ind_cva));
        row(out, "industry FVA", fixed(*ind_fva));
    }
    return exit_ok;
}

inline int cmd_tree(const RunConfig& cfg, const Options&, std::ostream& out) {
    const Lattice lattice(cfg.lattice_spec());
    const ValuedTree tree = rollback(lattice, cfg.portfolio, cfg.discount_mode());
    write_tree_csv(out, lattice, tree);
    return exit_ok;
}

/// Closed-form reference for a single european vanilla leg under a
/// sign-independent discount rate.
inline std::optional<double> closed_form_reference(const RunConfig& cfg) {
    if (cfg.engine.discount == DiscountKind::switching) return std::nullopt;
    if (cfg.portfolio.legs.size() != 1) return std::nullopt;
    const PayoffLeg& leg = cfg.portfolio.legs.front();
    if (leg.exercise != Exercise::european) return std::nullopt;
    if (leg.kind != LegKind::call && leg.kind != LegKind::put) return std::nullopt;
    const double rate =
        cfg.engine.discount == DiscountKind::constant ? cfg.engine.constant_rate : cfg.rates.ois_rate;
    return leg.quantity * closed_form_vanilla(cfg.spot, leg.strike, cfg.volatility, cfg.portfolio.expiry,
                                              cfg.rates.repo_rate, cfg.rates.dividend_yield, rate,
                                              leg.kind == LegKind::call ? VanillaKind::call : VanillaKind::put);
}

/// Errors at or below this level count as exact and always pass the
/// decreasing-error check.
inline double exact_threshold(double reference) { return 1e-9 * std::max(1.0, std::abs(reference)); }

inline bool decreasing(const std::vector<double>& errors, double exact) {
    for (std::size_t k = 1; k < errors.size(); ++k)
        if (!(errors[k] < errors[k - 1] || errors[k] <= exact)) return false;
    return true;
}

inline constexpr double tree_pde_tolerance = 5e-3;

inline int cmd_converge(const RunConfig& cfg, const Options& opt, std::ostream& out) {
    const DiscountMode mode = cfg.discount_mode();
    std::vector<int> ns = cfg.engine.converge_steps;
    if (opt.steps) ns = {*opt.steps};
    const std::optional<double> cf = closed_form_reference(cfg);
    bool passed = true;

    std::vector<double> tree_values, tree_errors;
    for (int n : ns) {
        LatticeSpec spec = cfg.lattice_spec();
        spec.steps = n;
        tree_values.push_back(price(Lattice(spec), cfg.portfolio, mode));
        if (cf) tree_errors.push_back(std::abs(tree_values.back() - *cf));
    }
    std::vector<GridSpec> grids;
    std::vector<double> pde_values, pde_errors;
    if (cf) {
        for (int div : {4, 2, 1}) {
            GridSpec g = cfg.engine.grid;
            g.space_steps = std::max(4, g.space_steps / div);
            g.time_steps = std::max(4, g.time_steps / div);
            grids.push_back(g);
            pde_values.push_back(solve_pde(cfg.pde_problem(), cfg.portfolio, mode, g).value);
            pde_errors.push_back(std::abs(pde_values.back() - *cf));
        }
        const double exact = exact_threshold(*cf);
        passed = passed && decreasing(tree_errors, exact) && decreasing(pde_errors, exact);
    }

    // Cross-check of the finest tree against the PDE under the configured mode.
    LatticeSpec fine = cfg.lattice_spec();
    fine.steps = std::max(512, *std::max_element(ns.begin(), ns.end()));
    const double fine_tree = price(Lattice(fine), cfg.portfolio, mode);
    const double pde_value = solve_pde(cfg.pde_problem(), cfg.portfolio, mode, cfg.engine.grid).value;
    const double gap = std::abs(fine_tree - pde_value);
    passed = passed && gap <= tree_pde_tolerance;

    if (opt.json) {
        std::vector<std::string> tree_rows, pde_rows;
        for (std::size_t k = 0; k < ns.size(); ++k) {
            JsonObject o;
            o.integer("steps", ns[k]).number("value", tree_values[k]);
            if (cf) o.number("error", tree_errors[k]);
            tree_rows.push_back(o.str());
        }
        for (std::size_t k = 0; k < grids.size(); ++k)
            pde_rows.push_back(JsonObject()
                                   .integer("space_steps", grids[k].space_steps)
                                   .integer("time_steps", grids[k].time_steps)
                                   .number("value", pde_values[k])
                                   .number("error", pde_errors[k])
                                   .str());
        JsonObject o;
        if (cf) o.number("closed_form", *cf);
        o.raw("tree", json_array(tree_rows)).raw("pde", json_array(pde_rows));
        o.raw("cross_check", JsonObject()
                                 .integer("tree_steps", fine.steps)
                                 .number("tree_value", fine_tree)
                                 .number("pde_value", pde_value)
                                 .number("difference", gap)
                                 .number("tolerance", tree_pde_tolerance)
                                 .str());
        o.boolean("passed", passed);
        out << o.str() << '\n';
    } else {
        out << "convergence\n";
        if (cf) row(out, "closed form", fixed(*cf, 8));
        out << "  " << "steps      value            |tree - cf|\n";
        for (std::size_t k = 0; k < ns.size(); ++k) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "  %-10d %-16.10f %s\n", ns[k], tree_values[k],
                          cf ? sci(tree_errors[k]).c_str() : "-");
            out << buf;
        }
        if (cf) {
            out << "  " << "grid       value            |pde - cf|\n";
            for (std::size_t k = 0; k < grids.size(); ++k) {
                char buf[128];
                const std::string dims =
                    std::to_string(grids[k].space_steps) + "x" + std::to_string(grids[k].time_steps);
                std::snprintf(buf, sizeof buf, "  %-10s %-16.10f %s\n", dims.c_str(), pde_values[k],
                              sci(pde_errors[k]).c_str());
                out << buf;
            }
        }
        row(out, "tree(" + std::to_string(fine.steps) + ")", fixed(fine_tree, 8));
        row(out, "pde", fixed(pde_value, 8));
        row(out, "|tree - pde|", sci(gap) + " (tolerance " + sci(tree_pde_tolerance) + ")");
        out << (passed ? "PASS" : "FAIL") << '\n';
    }
    return passed ? exit_ok : exit_check_failed;
}

/// Loads the config, applies command-line overrides and runs one command.
/// Diagnostics go to err as a single line.
inline int run(Command command, const Options& opt, std::ostream& out, std::ostream& err) {
    try {
        RunConfig cfg = load_config(opt.config_path);
        if (opt.steps) {
            if (*opt.steps < 1) throw ConfigError("--steps must be at least 1");
            cfg.engine.steps = *opt.steps;
        }
        for (const auto& w : cfg.warnings) err << "warning: " << w << '\n';

        std::ofstream file;
        std::ostream* sink = &out;
        if (!opt.out_path.empty()) {
            file.open(opt.out_path);
            if (!file) throw ConfigError("cannot open output file '" + opt.out_path + "'");
            sink = &file;
        }
        switch (command) {
            case Command::price: return cmd_price(cfg, opt, *sink);
            case Command::xva: return cmd_xva(cfg, opt, *sink);
            case Command::tree: return cmd_tree(cfg, opt, *sink);
            case Command::converge: return cmd_converge(cfg, opt, *sink);
        }
        return exit_ok;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const LatticeError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return exit_numerical_failure;
    } catch (const PdeStabilityError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return exit_numerical_failure;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return exit_numerical_failure;
    }
}

}  // namespace xvatree::cli
