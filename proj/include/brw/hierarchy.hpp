#pragma once

#include <span>
#include <utility>
#include <vector>

#include "brw/kernel.hpp"
#include "brw/model.hpp"
#include "brw/ode.hpp"

namespace brw {

/// m_n(t, x_1..x_n) over all ordered site tuples, row-major in (x_1, ..., x_n).
struct MomentTensor {
    int order = 0;
    TorusGrid grid;
    double time = 0.0;
    std::vector<double> values;

    double at(std::span<const Site> sites) const;
};

/// One affine row: d/dt y[i] = constant + sum entries.
struct SparseRow {
    double constant = 0.0;
    std::vector<std::pair<std::size_t, double>> entries;
};

/// Moment equations of orders 1..n stacked into one affine system. Each row is derived by
/// expanding E prod_s (n_s + xi_s)^{p_s} over the distinct sites of the tuple and replacing
/// the increment moments with their conditional forms (at most two sites move per event).
/// Row j only references orders <= j, so the system is block lower-triangular.
class HierarchyOperator {
public:
    static constexpr int kMaxOrder = 3;

    /// Throws InvalidArgument for order outside 1..3.
    static HierarchyOperator assemble(int order, const ModelParams& params, const TorusGrid& grid);

    int order() const { return order_; }
    const TorusGrid& grid() const { return grid_; }
    std::size_t unknowns() const { return rows_.size(); }
    /// Start of the order-j block in the stacked vector.
    std::size_t block_offset(int j) const;
    std::size_t index(std::span<const Site> tuple) const;
    const SparseRow& row(std::span<const Site> tuple) const { return rows_[index(tuple)]; }
    /// Coefficient of column `col` in row `row` (0 if absent).
    double coefficient(std::span<const Site> row, std::span<const Site> col) const;

    void apply(std::span<const double> y, std::span<double> dy) const;

    /// Stacked initial moments of i.i.d. initial data: prod_s E n(0)^{p_s}.
    std::vector<double> initial_state(const InitialCondition& init) const;

private:
    HierarchyOperator(int order, TorusGrid grid);

    int order_;
    TorusGrid grid_;
    std::vector<std::size_t> offsets_;
    std::vector<SparseRow> rows_;
};

struct HierarchyTrajectory {
    int order = 0;
    TorusGrid grid;
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    double step = 0.0;

    MomentTensor tensor(int j, std::size_t time_index) const;
};

/// RK4 with step halving (change < control.tolerance at every output time).
HierarchyTrajectory integrate(const HierarchyOperator& op, std::span<const double> y0,
                              std::span<const double> times, const StepControl& control = {});

/// Fixed-step RK4.
HierarchyTrajectory integrate_fixed(const HierarchyOperator& op, std::span<const double> y0,
                                    std::span<const double> times, double h);

} // namespace brw
