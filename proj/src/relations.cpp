#include "brw/relations.hpp"

#include <cmath>

namespace brw {

double LinearForm::evaluate(std::span<const std::int64_t> counts) const
{
    double s = constant;
    for (const auto& [site, w] : terms) s += w * static_cast<double>(counts[site]);
    return s;
}

XiRelations::XiRelations(const ModelParams& params, const TorusGrid& grid)
    : params_(params), grid_(grid), rates_(derived_rates(params.law)),
      walk_(JumpTable::from_kernel(params.kernel, grid, 1.0))
{
}

double XiRelations::kernel_weight(Site x, Site y) const
{
    if (x == y) return 0.0;
    return params_.kernel.weight(grid_.displacement(x, y));
}

LinearForm XiRelations::mean(Site x) const
{
    const double kappa = params_.kappa();
    LinearForm f;
    f.constant = params_.k;
    f.add(x, rates_.beta - params_.law.mu - kappa);
    for (std::size_t e = 0; e < walk_.jump_count(); ++e) f.add(walk_.neighbor(x, e), kappa * walk_.rate(e));
    return f;
}

LinearForm XiRelations::power(Site x, int p) const
{
    if (p == 1) return mean(x);
    if (p < 1) throw InvalidArgument("increment power must be >= 1");
    const double kappa = params_.kappa();
    double branching = 0.0;
    for (const auto& [n, bn] : params_.law.b) branching += std::pow(n - 1.0, p) * bn;
    const double sign = (p % 2 == 0) ? 1.0 : -1.0;
    LinearForm f;
    f.constant = params_.k;
    f.add(x, branching + sign * (params_.law.mu + kappa));
    for (std::size_t e = 0; e < walk_.jump_count(); ++e) f.add(walk_.neighbor(x, e), kappa * walk_.rate(e));
    return f;
}

LinearForm XiRelations::mixed(Site x, int p, Site y, int q) const
{
    if (x == y) throw InvalidArgument("mixed increment moment needs distinct sites");
    if (p < 1 || q < 1) throw InvalidArgument("increment powers must be >= 1");
    const double kappa = params_.kappa();
    const double sp = (p % 2 == 0) ? 1.0 : -1.0;
    const double sq = (q % 2 == 0) ? 1.0 : -1.0;
    LinearForm f;
    const double ayx = kernel_weight(x, y); // a(y - x): a particle at x jumps to y
    const double axy = kernel_weight(y, x);
    if (ayx != 0.0) f.add(x, kappa * sp * ayx);
    if (axy != 0.0) f.add(y, kappa * sq * axy);
    return f;
}

LinearForm XiRelations::moment(std::span<const SitePower> factors) const
{
    switch (factors.size()) {
    case 1: return power(factors[0].site, factors[0].power);
    case 2: return mixed(factors[0].site, factors[0].power, factors[1].site, factors[1].power);
    default: return LinearForm{}; // no single event touches three sites
    }
}

} // namespace brw
