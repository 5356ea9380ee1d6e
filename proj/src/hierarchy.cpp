#include "brw/hierarchy.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include "brw/relations.hpp"

namespace brw {

namespace {

double binomial(int n, int k)
{
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Distinct sites of a tuple with multiplicities, sorted by site.
std::vector<SitePower> group(std::span<const Site> tuple)
{
    std::vector<Site> sorted(tuple.begin(), tuple.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<SitePower> out;
    for (Site s : sorted) {
        if (!out.empty() && out.back().site == s)
            ++out.back().power;
        else
            out.push_back({s, 1});
    }
    return out;
}

std::size_t row_major(std::span<const Site> tuple, std::size_t sites)
{
    std::size_t i = 0;
    for (Site s : tuple) i = i * sites + s;
    return i;
}

} // namespace

double MomentTensor::at(std::span<const Site> sites) const
{
    if (static_cast<int>(sites.size()) != order) throw InvalidArgument("tuple length differs from order");
    for (Site s : sites)
        if (s >= grid.size()) throw InvalidArgument("site outside the torus");
    return values[row_major(sites, grid.size())];
}

HierarchyOperator::HierarchyOperator(int order, TorusGrid grid) : order_(order), grid_(std::move(grid))
{
    std::size_t offset = 0;
    std::size_t block = 1;
    offsets_.push_back(0);
    for (int j = 1; j <= order_; ++j) {
        block *= grid_.size();
        offsets_.push_back(offset);
        offset += block;
    }
    offsets_.push_back(offset);
    rows_.resize(offset);
}

std::size_t HierarchyOperator::block_offset(int j) const
{
    if (j < 1 || j > order_) throw InvalidArgument("order outside the assembled range");
    return offsets_[j];
}

std::size_t HierarchyOperator::index(std::span<const Site> tuple) const
{
    const int j = static_cast<int>(tuple.size());
    for (Site s : tuple)
        if (s >= grid_.size()) throw InvalidArgument("site outside the torus");
    return block_offset(j) + row_major(tuple, grid_.size());
}

double HierarchyOperator::coefficient(std::span<const Site> row, std::span<const Site> col) const
{
    const std::size_t c = index(col);
    for (const auto& [i, w] : rows_[index(row)].entries)
        if (i == c) return w;
    return 0.0;
}

HierarchyOperator HierarchyOperator::assemble(int order, const ModelParams& params,
                                              const TorusGrid& grid)
{
    if (order < 1 || order > kMaxOrder)
        throw InvalidArgument("hierarchy order must be in 1.." + std::to_string(kMaxOrder));
    grid.require_fits(params.kernel);
    HierarchyOperator op(order, grid);
    const XiRelations rel(params, grid);
    const std::size_t S = grid.size();

    for (int j = 1; j <= order; ++j) {
        std::size_t block = 1;
        for (int i = 0; i < j; ++i) block *= S;
        std::vector<Site> tuple(j);
        for (std::size_t r = 0; r < block; ++r) {
            std::size_t rest = r;
            for (int i = j - 1; i >= 0; --i) {
                tuple[i] = rest % S;
                rest /= S;
            }
            const std::vector<SitePower> sites = group(tuple);
            std::map<std::size_t, double> acc;
            double constant = 0.0;

            // Adds w * E[prod_s n_s^{powers_s} * n(extra)] (extra optional).
            auto add_term = [&](const std::vector<int>& powers, std::optional<Site> extra, double w) {
                std::vector<Site> col;
                for (std::size_t i = 0; i < sites.size(); ++i)
                    col.insert(col.end(), static_cast<std::size_t>(powers[i]), sites[i].site);
                if (extra) col.push_back(*extra);
                if (col.empty()) {
                    constant += w;
                    return;
                }
                std::sort(col.begin(), col.end());
                acc[op.offsets_[col.size()] + row_major(col, S)] += w;
            };
            auto expand = [&](std::span<const SitePower> factors, const std::vector<int>& remaining,
                              double weight) {
                const LinearForm f = rel.moment(factors);
                if (f.constant != 0.0) add_term(remaining, std::nullopt, weight * f.constant);
                for (const auto& [site, w] : f.terms) add_term(remaining, site, weight * w);
            };

            std::vector<int> base(sites.size());
            for (std::size_t i = 0; i < sites.size(); ++i) base[i] = sites[i].power;

            for (std::size_t a = 0; a < sites.size(); ++a) {
                for (int qa = 1; qa <= sites[a].power; ++qa) {
                    std::vector<int> rem = base;
                    rem[a] -= qa;
                    const SitePower f[1] = {{sites[a].site, qa}};
                    expand(f, rem, binomial(sites[a].power, qa));
                }
                for (std::size_t b = a + 1; b < sites.size(); ++b) {
                    for (int qa = 1; qa <= sites[a].power; ++qa) {
                        for (int qb = 1; qb <= sites[b].power; ++qb) {
                            std::vector<int> rem = base;
                            rem[a] -= qa;
                            rem[b] -= qb;
                            const SitePower f[2] = {{sites[a].site, qa}, {sites[b].site, qb}};
                            expand(f, rem, binomial(sites[a].power, qa) * binomial(sites[b].power, qb));
                        }
                    }
                }
            }

            SparseRow& row = op.rows_[op.offsets_[j] + r];
            row.constant = constant;
            for (const auto& [c, w] : acc)
                if (w != 0.0) row.entries.emplace_back(c, w);
        }
    }
    return op;
}

void HierarchyOperator::apply(std::span<const double> y, std::span<double> dy) const
{
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        double s = rows_[i].constant;
        for (const auto& [c, w] : rows_[i].entries) s += w * y[c];
        dy[i] = s;
    }
}

std::vector<double> HierarchyOperator::initial_state(const InitialCondition& init) const
{
    std::vector<double> y(rows_.size());
    const std::size_t S = grid_.size();
    for (int j = 1; j <= order_; ++j) {
        std::vector<Site> tuple(j);
        const std::size_t block = offsets_[j + 1] - offsets_[j];
        for (std::size_t r = 0; r < block; ++r) {
            std::size_t rest = r;
            for (int i = j - 1; i >= 0; --i) {
                tuple[i] = rest % S;
                rest /= S;
            }
            double v = 1.0;
            for (const auto& sp : group(tuple)) v *= init.raw_moment(sp.power);
            y[offsets_[j] + r] = v;
        }
    }
    return y;
}

MomentTensor HierarchyTrajectory::tensor(int j, std::size_t time_index) const
{
    if (j < 1 || j > order) throw InvalidArgument("order outside the integrated range");
    if (time_index >= times.size()) throw InvalidArgument("time index out of range");
    std::size_t offset = 0, block = 1;
    for (int i = 1; i <= j; ++i) {
        block *= grid.size();
        if (i < j) offset += block;
    }
    MomentTensor t{j, grid, times[time_index], {}};
    const auto& y = states[time_index];
    t.values.assign(y.begin() + static_cast<std::ptrdiff_t>(offset),
                    y.begin() + static_cast<std::ptrdiff_t>(offset + block));
    return t;
}

namespace {

HierarchyTrajectory wrap(const HierarchyOperator& op, OdeSolution sol)
{
    HierarchyTrajectory tr;
    tr.order = op.order();
    tr.grid = op.grid();
    tr.times = std::move(sol.times);
    tr.states = std::move(sol.states);
    tr.step = sol.step;
    return tr;
}

OdeRhs rhs_of(const HierarchyOperator& op)
{
    return [&op](double, std::span<const double> y, std::span<double> dy) { op.apply(y, dy); };
}

void check_initial(const HierarchyOperator& op, std::span<const double> y0)
{
    if (y0.size() != op.unknowns()) throw InvalidArgument("initial state size differs from the operator");
}

} // namespace

HierarchyTrajectory integrate(const HierarchyOperator& op, std::span<const double> y0,
                              std::span<const double> times, const StepControl& control)
{
    check_initial(op, y0);
    return wrap(op, rk4_controlled(rhs_of(op), y0, 0.0, times, control));
}

HierarchyTrajectory integrate_fixed(const HierarchyOperator& op, std::span<const double> y0,
                                    std::span<const double> times, double h)
{
    check_initial(op, y0);
    return wrap(op, rk4_fixed(rhs_of(op), y0, 0.0, times, h));
}

} // namespace brw
