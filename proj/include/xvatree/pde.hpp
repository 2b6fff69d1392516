#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "xvatree/discounting.hpp"
#include "xvatree/payoff.hpp"

namespace xvatree {

enum class TimeScheme { explicit_euler, crank_nicolson };

struct GridSpec {
    /// S_max / S0; zero selects 5 e^{4 sigma sqrt(T)}. The grid is symmetric
    /// in log-price around the spot, so S_min = S0^2 / S_max.
    double s_max_multiple = 0.0;
    int space_steps = 400;
    int time_steps = 400;
    TimeScheme scheme = TimeScheme::crank_nicolson;
};

struct PdeProblem {
    double spot = 0.0;
    double sigma = 0.0;
    double repo_rate = 0.0;
    double dividend_yield = 0.0;
};

class PdeStabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PdeSolution {
    double value = 0.0;
    /// rates[k][i]: discount rate used at space node i during time step k
    /// (Rannacher half steps count as separate steps).
    std::vector<std::vector<double>> rates;
    /// levels[k]: solution after time step k; levels[0] is the payoff.
    std::vector<std::vector<double>> levels;
};

namespace detail {

/// Payoff of one leg on the log-price cell [xa, xb]. A cell holding the
/// strike gets the cell average so the kink does not inject grid-aligned
/// oscillation; every other cell takes the point value at its centre.
inline double cell_payoff(const PayoffLeg& leg, double xa, double xb) {
    const double width = xb - xa;
    const double k = leg.strike;
    const bool kinked = (leg.kind == LegKind::call || leg.kind == LegKind::put) && k > 0.0 &&
                        std::log(k) > xa && std::log(k) < xb;
    if (!kinked) return leg.payoff(std::exp(0.5 * (xa + xb)));
    double unit = 0.0;
    if (leg.kind == LegKind::call) {
        const double lo = std::log(k);
        unit = (std::exp(xb) - std::exp(lo) - k * (xb - lo)) / width;
    } else {
        const double hi = std::log(k);
        unit = (k * (hi - xa) - (std::exp(hi) - std::exp(xa))) / width;
    }
    return leg.quantity * unit;
}

struct Tridiagonal {
    std::vector<double> lower, diag, upper;
};

/// Thomas algorithm; the system must be diagonally dominant enough not to
/// need pivoting.
inline void solve_tridiagonal(Tridiagonal m, std::vector<double>& rhs) {
    const std::size_t n = rhs.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = m.lower[i] / m.diag[i - 1];
        m.diag[i] -= w * m.upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= m.diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - m.upper[i] * rhs[i + 1]) / m.diag[i];
}

class PdeGrid {
public:
    PdeGrid(const PdeProblem& problem, double expiry, const GridSpec& grid) {
        if (!(problem.spot > 0.0) || !(problem.sigma > 0.0) || !(expiry > 0.0))
            throw std::invalid_argument("spot, volatility and expiry must be positive");
        if (grid.space_steps < 4 || grid.time_steps < 4)
            throw std::invalid_argument("grid needs at least 4 space and 4 time steps");
        const double multiple = grid.s_max_multiple > 0.0
                                    ? grid.s_max_multiple
                                    : 5.0 * std::exp(4.0 * problem.sigma * std::sqrt(expiry));
        if (!(multiple > 1.0)) throw std::invalid_argument("s_max multiple must exceed 1");
        m_ = grid.space_steps;
        const double half_width = std::log(multiple);
        x0_ = std::log(problem.spot) - half_width;
        dx_ = 2.0 * half_width / m_;
        x_.resize(static_cast<std::size_t>(m_) + 1);
        s_.resize(x_.size());
        for (int i = 0; i <= m_; ++i) {
            x_[i] = x0_ + i * dx_;
            s_[i] = std::exp(x_[i]);
        }
        if (m_ % 2 == 0) s_[m_ / 2] = problem.spot;
    }

    int m() const { return m_; }
    double dx() const { return dx_; }
    const std::vector<double>& s() const { return s_; }
    double x(int i) const { return x_[i]; }

    /// Quadratic interpolation in log-price.
    double interpolate(const std::vector<double>& v, double spot) const {
        const double xs = std::log(spot);
        int i = static_cast<int>(std::lround((xs - x0_) / dx_));
        i = std::clamp(i, 1, m_ - 1);
        const double t = (xs - x_[i]) / dx_;
        return v[i] + 0.5 * t * (v[i + 1] - v[i - 1]) + 0.5 * t * t * (v[i + 1] - 2.0 * v[i] + v[i - 1]);
    }

    /// Linear-in-S extrapolation weights for the edge nodes (V_SS = 0).
    double low_weight() const { return (s_[0] - s_[1]) / (s_[1] - s_[2]); }
    double high_weight() const { return (s_[m_] - s_[m_ - 1]) / (s_[m_ - 1] - s_[m_ - 2]); }

    void apply_boundaries(std::vector<double>& v) const {
        const double w0 = low_weight();
        const double wm = high_weight();
        v[0] = (1.0 + w0) * v[1] - w0 * v[2];
        v[m_] = (1.0 + wm) * v[m_ - 1] - wm * v[m_ - 2];
    }

private:
    int m_ = 0;
    double x0_ = 0.0;
    double dx_ = 0.0;
    std::vector<double> x_, s_;
};

/// rate_field(step, v) returns the per-node discount rate for that step.
template <class RateField>
PdeSolution solve_pde_impl(const PdeProblem& problem, const Portfolio& portfolio,
                           const GridSpec& grid_spec, RateField&& rate_field, bool keep_levels) {
    check_portfolio(portfolio);
    if (portfolio.has_american()) throw std::invalid_argument("the PDE solver prices european legs only");

    const double expiry = portfolio.expiry;
    const PdeGrid grid(problem, expiry, grid_spec);
    const int m = grid.m();
    const double dx = grid.dx();
    const double dtau = expiry / grid_spec.time_steps;

    const double a = 0.5 * problem.sigma * problem.sigma;
    const double b = problem.repo_rate - problem.dividend_yield - a;
    const double lo = a / (dx * dx) - b / (2.0 * dx);
    const double hi = a / (dx * dx) + b / (2.0 * dx);
    const double mid = -2.0 * a / (dx * dx);

    if (grid_spec.scheme == TimeScheme::explicit_euler && dtau * problem.sigma * problem.sigma > dx * dx)
        throw PdeStabilityError("explicit scheme unstable: dt must not exceed dx^2 / sigma^2");

    std::vector<double> v(static_cast<std::size_t>(m) + 1);
    for (int i = 0; i <= m; ++i) {
        double total = 0.0;
        for (const auto& leg : portfolio.legs)
            total += cell_payoff(leg, grid.x(i) - 0.5 * dx, grid.x(i) + 0.5 * dx);
        v[i] = total;
    }

    // Implicit weight and length of every step; CN starts with two implicit
    // half steps (Rannacher) to damp the payoff kinks.
    std::vector<std::pair<double, double>> steps;
    if (grid_spec.scheme == TimeScheme::crank_nicolson) {
        steps.push_back({1.0, 0.5 * dtau});
        steps.push_back({1.0, 0.5 * dtau});
        for (int k = 1; k < grid_spec.time_steps; ++k) steps.push_back({0.5, dtau});
    } else {
        for (int k = 0; k < grid_spec.time_steps; ++k) steps.push_back({0.0, dtau});
    }

    PdeSolution out;
    if (keep_levels) out.levels.push_back(v);
    const std::size_t interior = static_cast<std::size_t>(m) - 1;
    Tridiagonal sys{std::vector<double>(interior), std::vector<double>(interior),
                    std::vector<double>(interior)};
    std::vector<double> rhs(interior);

    for (std::size_t k = 0; k < steps.size(); ++k) {
        const auto [theta, h] = steps[k];
        std::vector<double> rates = rate_field(k, v);
        if (rates.size() != v.size()) throw std::invalid_argument("rate field has wrong size");

        for (int i = 1; i < m; ++i) {
            const double op = lo * v[i - 1] + (mid - rates[i]) * v[i] + hi * v[i + 1];
            rhs[i - 1] = v[i] + (1.0 - theta) * h * op;
        }
        std::vector<double> next(v.size());
        if (theta == 0.0) {
            for (int i = 1; i < m; ++i) next[i] = rhs[i - 1];
        } else {
            for (int i = 1; i < m; ++i) {
                sys.lower[i - 1] = -theta * h * lo;
                sys.diag[i - 1] = 1.0 - theta * h * (mid - rates[i]);
                sys.upper[i - 1] = -theta * h * hi;
            }
            // Fold the edge extrapolation into the first and last rows.
            const double w0 = grid.low_weight();
            const double wm = grid.high_weight();
            sys.diag[0] += sys.lower[0] * (1.0 + w0);
            sys.upper[0] -= sys.lower[0] * w0;
            sys.diag[interior - 1] += sys.upper[interior - 1] * (1.0 + wm);
            sys.lower[interior - 1] -= sys.upper[interior - 1] * wm;
            sys.lower[0] = 0.0;
            sys.upper[interior - 1] = 0.0;
            std::vector<double> x = rhs;
            solve_tridiagonal(sys, x);
            for (int i = 1; i < m; ++i) next[i] = x[i - 1];
        }
        grid.apply_boundaries(next);
        v = std::move(next);
        out.rates.push_back(std::move(rates));
        if (keep_levels) out.levels.push_back(v);
    }
    out.value = grid.interpolate(v, problem.spot);
    return out;
}

}  // namespace detail

/// Finite-difference solution of the pricing PDE with a sign-switching
/// discount rate. The rate at each node is chosen from the sign of the
/// solution at the previous time level.
inline PdeSolution solve_pde(const PdeProblem& problem, const Portfolio& portfolio,
                             const DiscountMode& mode, const GridSpec& grid = {},
                             bool keep_levels = false) {
    const TwoSidedDiscount rates = resolve(mode);
    return detail::solve_pde_impl(
        problem, portfolio, grid,
        [&](std::size_t, const std::vector<double>& v) {
            std::vector<double> r(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) r[i] = rate_for(rates, v[i]);
            return r;
        },
        keep_levels);
}

/// Linear solve with a prescribed discount-rate field, e.g. one frozen from
/// a previous solution.
inline PdeSolution solve_pde_frozen(const PdeProblem& problem, const Portfolio& portfolio,
                                    const std::vector<std::vector<double>>& rate_field,
                                    const GridSpec& grid = {}) {
    return detail::solve_pde_impl(
        problem, portfolio, grid,
        [&](std::size_t k, const std::vector<double>&) {
            if (k >= rate_field.size()) throw std::invalid_argument("rate field has too few steps");
            return rate_field[k];
        },
        false);
}

}  // namespace xvatree
