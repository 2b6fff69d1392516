#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace xvatree {

/// Inputs of a Cox-Ross-Rubinstein tree. The drift is the repo rate net of
/// dividends; discounting is chosen separately at rollback time.
struct LatticeSpec {
    double spot = 0.0;
    double sigma = 0.0;
    double repo_rate = 0.0;
    double dividend_yield = 0.0;
    double expiry = 0.0;
    int steps = 1;
};

/// Thrown when the tree cannot carry a valid risk-neutral probability.
class LatticeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Lattice {
public:
    explicit Lattice(const LatticeSpec& spec) : spec_(spec) {
        if (!(spec.spot > 0.0)) throw std::invalid_argument("spot must be positive");
        if (!(spec.sigma > 0.0)) throw std::invalid_argument("volatility must be positive");
        if (!(spec.expiry > 0.0)) throw std::invalid_argument("expiry must be positive");
        if (spec.steps < 1) throw std::invalid_argument("step count must be at least 1");
        if (!std::isfinite(spec.repo_rate) || !std::isfinite(spec.dividend_yield))
            throw std::invalid_argument("drift rates must be finite");

        dt_ = spec.expiry / spec.steps;
        log_step_ = spec.sigma * std::sqrt(dt_);
        up_ = std::exp(log_step_);
        down_ = std::exp(-log_step_);
        growth_ = std::exp((spec.repo_rate - spec.dividend_yield) * dt_);
        up_prob_ = (growth_ - down_) / (up_ - down_);
        if (!(up_prob_ > 0.0 && up_prob_ < 1.0))
            throw LatticeError("step count too small for drift/volatility (up probability " +
                               std::to_string(up_prob_) + ")");
    }

    const LatticeSpec& spec() const { return spec_; }
    int steps() const { return spec_.steps; }
    double dt() const { return dt_; }
    double spot() const { return spec_.spot; }
    double up_factor() const { return up_; }
    double down_factor() const { return down_; }
    double up_prob() const { return up_prob_; }
    /// e^{(r_s - q) dt}, the one-step forward growth.
    double growth() const { return growth_; }
    double log_step() const { return log_step_; }

    /// S0 u^j d^(i-j), computed from the net up-move count so that
    /// recombining nodes are bit-identical.
    double node_price(int step, int up_count) const {
        if (step < 0 || step > spec_.steps || up_count < 0 || up_count > step)
            throw std::out_of_range("lattice node index out of range");
        return price_unchecked(step, up_count);
    }

    double price_unchecked(int step, int up_count) const {
        return spec_.spot * std::exp((2 * up_count - step) * log_step_);
    }

    static std::size_t node_count(int steps) {
        return static_cast<std::size_t>(steps + 1) * static_cast<std::size_t>(steps + 2) / 2;
    }

private:
    LatticeSpec spec_;
    double dt_ = 0.0;
    double log_step_ = 0.0;
    double up_ = 0.0;
    double down_ = 0.0;
    double growth_ = 0.0;
    double up_prob_ = 0.0;
};

inline Lattice build_lattice(double spot, double sigma, double repo_rate, double dividend_yield,
                             double expiry, int steps) {
    return Lattice(LatticeSpec{spot, sigma, repo_rate, dividend_yield, expiry, steps});
}

}  // namespace xvatree
