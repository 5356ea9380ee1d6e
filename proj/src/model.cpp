#include "brw/model.hpp"

#include <cmath>

namespace brw {

DerivedRates derived_rates(const BranchingLaw& law)
{
    DerivedRates r;
    for (const auto& [n, bn] : law.b) {
        const double m = n - 1.0;
        r.beta += m * bn;
        r.sum_sq += m * m * bn;
        r.sum_fact += m * (n - 2.0) * bn;
        r.sum_choose2 += 0.5 * n * m * bn;
        r.branch_total += bn;
    }
    r.b1 = -(law.mu + r.branch_total);
    return r;
}

ValidationReport validate_law(const BranchingLaw& law, int max_offspring)
{
    ValidationReport report;
    if (!(law.mu >= 0.0) || !std::isfinite(law.mu)) report.violations.push_back("mu must be >= 0");
    for (const auto& [n, bn] : law.b) {
        if (n < 2) report.violations.push_back("offspring count " + std::to_string(n) + " < 2");
        if (n > max_offspring)
            report.violations.push_back("offspring count " + std::to_string(n) +
                                        " exceeds N_max " + std::to_string(max_offspring));
        if (!(bn >= 0.0) || !std::isfinite(bn))
            report.violations.push_back("b_" + std::to_string(n) + " must be >= 0");
    }
    return report;
}

double evaluate_infinitesimal_gf(const BranchingLaw& law, double s)
{
    const DerivedRates r = derived_rates(law);
    double value = law.mu + r.b1 * s;
    for (const auto& [n, bn] : law.b) value += bn * std::pow(s, n);
    return value;
}

Criticality classify_criticality(const BranchingLaw& law)
{
    const double gap = law.mu - derived_rates(law).beta;
    if (std::abs(gap) <= 1e-12) return Criticality::critical;
    return gap > 0.0 ? Criticality::subcritical : Criticality::supercritical;
}

std::string to_string(Criticality c)
{
    switch (c) {
    case Criticality::subcritical: return "subcritical";
    case Criticality::critical: return "critical";
    case Criticality::supercritical: return "supercritical";
    }
    return "unknown";
}

double InitialCondition::raw_moment(int p) const
{
    if (p == 0) return 1.0;
    const double x = value;
    if (kind == Kind::constant) return std::pow(x, p);
    switch (p) {
    case 1: return x;
    case 2: return x * x + x;
    case 3: return x * x * x + 3.0 * x * x + x;
    case 4: return x * x * x * x + 6.0 * x * x * x + 7.0 * x * x + x;
    default: throw InvalidArgument("Poisson raw moments implemented up to order 4");
    }
}

double ModelParams::decay_rate() const { return law.mu - derived_rates(law).beta; }

double ModelParams::stationary_mean() const { return k / decay_rate(); }

void ModelParams::require_steady_state() const
{
    if (classify_criticality(law) != Criticality::subcritical)
        throw InvalidArgument("steady state requires a subcritical law (mu > beta)");
    if (!(k > 0.0)) throw InvalidArgument("steady state requires immigration k > 0");
}

double SpatialModel::beta(Site x) const
{
    double s = 0.0;
    for (const auto& [n, table] : b) s += (n - 1.0) * table[x];
    return s;
}

double SpatialModel::sum_sq(Site x) const
{
    double s = 0.0;
    for (const auto& [n, table] : b) s += (n - 1.0) * (n - 1.0) * table[x];
    return s;
}

std::vector<double> SpatialModel::v_table() const
{
    std::vector<double> out(grid.size());
    for (Site x = 0; x < grid.size(); ++x) out[x] = v(x);
    return out;
}

} // namespace brw
