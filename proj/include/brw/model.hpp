#pragma once

#include <map>
#include <string>
#include <vector>

#include "brw/kernel.hpp"

namespace brw {

/// Death rate mu and splitting intensities b_n (n >= 2): a particle becomes n particles.
struct BranchingLaw {
    double mu = 0.0;
    std::map<int, double> b;
};

/// Scalars derived from a branching law. b1 = -(mu + sum b_n).
struct DerivedRates {
    double beta = 0.0;        // sum (n-1) b_n
    double b1 = 0.0;
    double sum_sq = 0.0;      // sum (n-1)^2 b_n
    double sum_fact = 0.0;    // sum (n-1)(n-2) b_n
    double sum_choose2 = 0.0; // sum C(n,2) b_n
    double branch_total = 0.0; // sum b_n, the per-particle splitting rate
};

inline constexpr int kDefaultMaxOffspring = 10;

DerivedRates derived_rates(const BranchingLaw& law);
ValidationReport validate_law(const BranchingLaw& law, int max_offspring = kDefaultMaxOffspring);

/// F(s) = mu + b_1 s + sum_{n>=2} b_n s^n.
double evaluate_infinitesimal_gf(const BranchingLaw& law, double s);

enum class Criticality { subcritical, critical, supercritical };
Criticality classify_criticality(const BranchingLaw& law);
std::string to_string(Criticality c);

/// Law of the i.i.d. initial field n(0, x).
struct InitialCondition {
    enum class Kind { constant, poisson };
    Kind kind = Kind::constant;
    double value = 1.0;

    double mean() const { return value; }
    /// E n(0,x)^p; Touchard polynomials for the Poisson case.
    double raw_moment(int p) const;
    double variance() const { return kind == Kind::poisson ? value : 0.0; }
};

struct ModelParams {
    KernelSpec kernel;
    BranchingLaw law;
    double k = 0.0;
    InitialCondition init;

    double kappa() const { return kernel.kappa; }
    /// mu - beta; positive in the subcritical regime.
    double decay_rate() const;
    /// k / (mu - beta).
    double stationary_mean() const;
    /// Throws InvalidArgument unless mu > beta and k > 0.
    void require_steady_state() const;
};

/// Site-dependent rates on a torus, used for the perturbed-stability analysis.
struct SpatialModel {
    KernelSpec kernel;
    TorusGrid grid;
    std::vector<double> mu;
    std::map<int, std::vector<double>> b;
    std::vector<double> k;

    double beta(Site x) const;
    double sum_sq(Site x) const;
    /// mu(x) - beta(x).
    double v(Site x) const { return mu[x] - beta(x); }
    std::vector<double> v_table() const;
};

} // namespace brw
