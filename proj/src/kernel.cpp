#include "brw/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

namespace brw {

bool LatticeOffset::is_zero() const
{
    return std::all_of(coords.begin(), coords.end(), [](int c) { return c == 0; });
}

LatticeOffset LatticeOffset::operator-() const
{
    LatticeOffset r = *this;
    for (int& c : r.coords) c = -c;
    return r;
}

int KernelSpec::support_radius() const
{
    int radius = 0;
    for (const auto& e : entries)
        for (int c : e.offset.coords) radius = std::max(radius, std::abs(c));
    return radius;
}

double KernelSpec::weight(const LatticeOffset& z) const
{
    for (const auto& e : entries)
        if (e.offset == z) return e.weight;
    return 0.0;
}

KernelSpec simple_random_walk(int dimension, double kappa)
{
    KernelSpec spec;
    spec.dimension = dimension;
    spec.kappa = kappa;
    const double w = 1.0 / (2.0 * dimension);
    for (int i = 0; i < dimension; ++i) {
        for (int sign : {1, -1}) {
            LatticeOffset z{std::vector<int>(dimension, 0)};
            z.coords[i] = sign;
            spec.entries.push_back({z, w});
        }
    }
    return spec;
}

// ---------------------------------------------------------------------------
// TorusGrid

TorusGrid::TorusGrid(std::vector<int> sides) : sides_(std::move(sides))
{
    if (sides_.empty()) throw InvalidArgument("torus grid needs at least one side");
    size_ = 1;
    for (int L : sides_) {
        if (L <= 0) throw InvalidArgument("torus side lengths must be positive");
        size_ *= static_cast<std::size_t>(L);
    }
}

Site TorusGrid::index(std::span<const int> coords) const
{
    Site s = 0;
    for (std::size_t i = 0; i < sides_.size(); ++i) {
        const int L = sides_[i];
        int c = coords[i] % L;
        if (c < 0) c += L;
        s = s * static_cast<Site>(L) + static_cast<Site>(c);
    }
    return s;
}

std::vector<int> TorusGrid::coords(Site site) const
{
    std::vector<int> c(sides_.size());
    for (std::size_t i = sides_.size(); i-- > 0;) {
        c[i] = static_cast<int>(site % static_cast<Site>(sides_[i]));
        site /= static_cast<Site>(sides_[i]);
    }
    return c;
}

Site TorusGrid::shift(Site site, const LatticeOffset& z) const
{
    auto c = coords(site);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += z.coords[i];
    return index(c);
}

LatticeOffset TorusGrid::displacement(Site x, Site y) const
{
    const auto cx = coords(x);
    const auto cy = coords(y);
    LatticeOffset d{std::vector<int>(cx.size())};
    for (std::size_t i = 0; i < cx.size(); ++i) {
        const int L = sides_[i];
        int v = ((cy[i] - cx[i]) % L + L) % L;
        if (2 * v > L) v -= L;
        d.coords[i] = v;
    }
    return d;
}

Site TorusGrid::site_of(const LatticeOffset& u) const
{
    if (u.dimension() != dimension())
        throw InvalidArgument("offset dimension does not match the torus");
    return index(u.coords);
}

void TorusGrid::require_fits(const KernelSpec& kernel) const
{
    if (kernel.dimension != dimension())
        throw InvalidArgument("kernel dimension does not match the torus dimension");
    const int r = kernel.support_radius();
    for (int L : sides_)
        if (L <= 2 * r)
            throw InvalidArgument("torus side " + std::to_string(L) +
                                  " must exceed twice the kernel support radius " +
                                  std::to_string(r));
}

std::string ValidationReport::summary() const
{
    if (ok()) return "pass";
    std::ostringstream os;
    os << "fail:";
    for (const auto& v : violations) os << ' ' << v << ';';
    return os.str();
}

// ---------------------------------------------------------------------------
// Validation

namespace {

// Echelon form over the integers; the rows generate Z^d iff the rank is d
// and the pivots are all +-1.
bool spans_integer_lattice(std::vector<std::vector<long long>> rows, int dimension)
{
    std::size_t pivot_row = 0;
    for (int col = 0; col < dimension; ++col) {
        // Euclid on column `col` among rows >= pivot_row.
        while (true) {
            std::size_t best = rows.size();
            for (std::size_t r = pivot_row; r < rows.size(); ++r) {
                if (rows[r][col] == 0) continue;
                if (best == rows.size() || std::llabs(rows[r][col]) < std::llabs(rows[best][col]))
                    best = r;
            }
            if (best == rows.size()) return false; // rank deficient
            std::swap(rows[pivot_row], rows[best]);
            bool reduced = true;
            for (std::size_t r = pivot_row + 1; r < rows.size(); ++r) {
                if (rows[r][col] == 0) continue;
                const long long q = rows[r][col] / rows[pivot_row][col];
                for (int c = col; c < dimension; ++c) rows[r][c] -= q * rows[pivot_row][c];
                if (rows[r][col] != 0) reduced = false;
            }
            if (reduced) break;
        }
        if (std::llabs(rows[pivot_row][col]) != 1) return false;
        ++pivot_row;
    }
    return true;
}

} // namespace

ValidationReport validate_kernel(const KernelSpec& spec)
{
    ValidationReport report;
    if (spec.dimension <= 0) report.violations.push_back("dimension must be positive");
    if (spec.entries.empty()) {
        report.violations.push_back("no jump entries");
        return report;
    }
    if (!(spec.kappa > 0.0)) report.violations.push_back("kappa must be positive");

    double total = 0.0;
    bool zero_offset = false;
    bool asymmetric = false;
    bool bad_weight = false;
    bool bad_dimension = false;
    for (const auto& e : spec.entries) {
        if (e.offset.dimension() != spec.dimension) {
            bad_dimension = true;
            continue;
        }
        if (e.offset.is_zero()) zero_offset = true;
        if (!(e.weight > 0.0 && e.weight <= 1.0)) bad_weight = true;
        total += e.weight;
        const double mirrored = spec.weight(-e.offset);
        if (mirrored != e.weight) asymmetric = true;
    }
    if (bad_dimension) report.violations.push_back("offset dimension mismatch");
    if (zero_offset) report.violations.push_back("zero offset present");
    if (bad_weight) report.violations.push_back("weight outside (0,1]");
    if (asymmetric) report.violations.push_back("asymmetric");
    if (std::abs(total - 1.0) > 1e-12) report.violations.push_back("bad normalization");

    if (!bad_dimension && spec.dimension > 0) {
        std::vector<std::vector<long long>> rows;
        for (const auto& e : spec.entries)
            if (e.weight > 0.0)
                rows.emplace_back(e.offset.coords.begin(), e.offset.coords.end());
        if (!spans_integer_lattice(std::move(rows), spec.dimension))
            report.violations.push_back("reducible");
    }
    return report;
}

// ---------------------------------------------------------------------------
// Fourier symbol and convolution powers

double fourier_symbol(const KernelSpec& spec, std::span<const double> theta)
{
    double s = 0.0;
    for (const auto& e : spec.entries) {
        double phase = 0.0;
        for (int i = 0; i < spec.dimension; ++i) phase += theta[i] * e.offset.coords[i];
        s += std::cos(phase) * e.weight;
    }
    return s;
}

std::vector<double> torus_frequency(const TorusGrid& grid, Site j)
{
    const auto c = grid.coords(j);
    std::vector<double> theta(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const int L = grid.sides()[i];
        int k = c[i];
        if (2 * k > L) k -= L;
        theta[i] = 2.0 * std::numbers::pi * k / L;
    }
    return theta;
}

std::vector<double> symbol_on_grid(const KernelSpec& spec, const TorusGrid& grid)
{
    std::vector<double> out(grid.size());
    for (Site j = 0; j < grid.size(); ++j) out[j] = fourier_symbol(spec, torus_frequency(grid, j));
    return out;
}

std::vector<double> kernel_table(const KernelSpec& spec, const TorusGrid& grid)
{
    std::vector<double> a(grid.size(), 0.0);
    for (const auto& e : spec.entries) a[grid.site_of(e.offset)] += e.weight;
    return a;
}

std::vector<double> convolution_power(const KernelSpec& spec, int n, const TorusGrid& grid)
{
    if (n < 1) throw InvalidArgument("convolution power needs n >= 1");
    const JumpTable jumps = JumpTable::from_kernel(spec, grid, 1.0);
    std::vector<double> cur = kernel_table(spec, grid);
    std::vector<double> next(grid.size());
    for (int step = 1; step < n; ++step) {
        std::fill(next.begin(), next.end(), 0.0);
        for (Site u = 0; u < grid.size(); ++u) {
            if (cur[u] == 0.0) continue;
            for (std::size_t e = 0; e < jumps.jump_count(); ++e)
                next[jumps.neighbor(u, e)] += cur[u] * jumps.rate(e);
        }
        cur.swap(next);
    }
    return cur;
}

double apply_generator(const KernelSpec& spec, const TorusGrid& grid, std::span<const double> f,
                       Site x)
{
    double s = 0.0;
    for (const auto& e : spec.entries) s += e.weight * (f[grid.shift(x, e.offset)] - f[x]);
    return s;
}

// ---------------------------------------------------------------------------
// JumpTable

JumpTable::JumpTable(const TorusGrid& grid, std::vector<LatticeOffset> offsets,
                     std::vector<double> rates)
    : grid_(grid), offsets_(std::move(offsets)), rates_(std::move(rates))
{
    if (offsets_.size() != rates_.size())
        throw InvalidArgument("jump offsets and rates differ in length");
    cumulative_.resize(rates_.size());
    double acc = 0.0;
    for (std::size_t e = 0; e < rates_.size(); ++e) {
        if (rates_[e] < 0.0) throw InvalidArgument("negative jump rate");
        acc += rates_[e];
        cumulative_[e] = acc;
    }
    total_rate_ = acc;
    neighbors_.resize(grid_.size() * rates_.size());
    for (Site x = 0; x < grid_.size(); ++x)
        for (std::size_t e = 0; e < rates_.size(); ++e)
            neighbors_[x * rates_.size() + e] = grid_.shift(x, offsets_[e]);
}

JumpTable JumpTable::from_kernel(const KernelSpec& kernel, const TorusGrid& grid, double scale)
{
    grid.require_fits(kernel);
    std::vector<LatticeOffset> offsets;
    std::vector<double> rates;
    for (const auto& e : kernel.entries) {
        offsets.push_back(e.offset);
        rates.push_back(scale * e.weight);
    }
    return JumpTable(grid, std::move(offsets), std::move(rates));
}

JumpTable JumpTable::pair(const KernelSpec& kernel, const TorusGrid& grid, double scale)
{
    grid.require_fits(kernel);
    std::vector<int> sides = grid.sides();
    sides.insert(sides.end(), grid.sides().begin(), grid.sides().end());
    const int d = grid.dimension();
    std::vector<LatticeOffset> offsets;
    std::vector<double> rates;
    for (int half = 0; half < 2; ++half) {
        for (const auto& e : kernel.entries) {
            LatticeOffset z{std::vector<int>(2 * d, 0)};
            for (int i = 0; i < d; ++i) z.coords[half * d + i] = e.offset.coords[i];
            offsets.push_back(std::move(z));
            rates.push_back(scale * e.weight);
        }
    }
    return JumpTable(TorusGrid(std::move(sides)), std::move(offsets), std::move(rates));
}

std::size_t JumpTable::pick(double u) const
{
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<std::size_t>(it - cumulative_.begin());
}

void JumpTable::apply(std::span<const double> f, std::span<double> out) const
{
    const std::size_t E = rates_.size();
    for (Site x = 0; x < grid_.size(); ++x) {
        double s = 0.0;
        const Site* nb = &neighbors_[x * E];
        for (std::size_t e = 0; e < E; ++e) s += rates_[e] * (f[nb[e]] - f[x]);
        out[x] = s;
    }
}

} // namespace brw
