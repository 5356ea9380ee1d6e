#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace brw {

using Site = std::size_t;

/// Raised for malformed inputs (bad config, invalid kernel, violated preconditions).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure cannot deliver its contract
/// (step control exhausted, population explosion guard tripped).
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Lattice displacement in units of lattice steps.
struct LatticeOffset {
    std::vector<int> coords;

    int dimension() const { return static_cast<int>(coords.size()); }
    bool is_zero() const;
    LatticeOffset operator-() const;
    bool operator==(const LatticeOffset&) const = default;
};

struct KernelEntry {
    LatticeOffset offset;
    double weight = 0.0;
};

/// Symmetric jump distribution a(z), z != 0, with jump intensity kappa.
/// The a(0) = -1 convention is never stored: the generator's -f(x) term realizes it.
struct KernelSpec {
    int dimension = 1;
    std::vector<KernelEntry> entries;
    double kappa = 1.0;

    /// Largest |z_i| over stored offsets.
    int support_radius() const;
    /// Weight a(z) for an exact offset match, 0 when z is not stored.
    double weight(const LatticeOffset& z) const;
};

/// Nearest-neighbour walk on Z^d with a(±e_i) = 1/(2d).
KernelSpec simple_random_walk(int dimension, double kappa);

/// Finite torus Z_{L_1} x ... x Z_{L_d}, sites indexed row-major.
class TorusGrid {
public:
    TorusGrid() = default;
    explicit TorusGrid(std::vector<int> sides);

    int dimension() const { return static_cast<int>(sides_.size()); }
    const std::vector<int>& sides() const { return sides_; }
    std::size_t size() const { return size_; }

    Site index(std::span<const int> coords) const;
    std::vector<int> coords(Site site) const;
    Site shift(Site site, const LatticeOffset& z) const;
    /// Displacement y - x reduced to the symmetric range (-L_i/2, L_i/2].
    LatticeOffset displacement(Site x, Site y) const;
    /// Site index of the torus point representing offset u (wrapped).
    Site site_of(const LatticeOffset& u) const;

    /// Throws InvalidArgument unless every side exceeds twice the kernel support radius.
    void require_fits(const KernelSpec& kernel) const;

    bool operator==(const TorusGrid&) const = default;

private:
    std::vector<int> sides_;
    std::size_t size_ = 0;
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
    std::string summary() const;
};

ValidationReport validate_kernel(const KernelSpec& spec);

/// Fourier symbol sum_{z != 0} cos(theta . z) a(z).
double fourier_symbol(const KernelSpec& spec, std::span<const double> theta);

/// Torus frequency theta_j with components 2 pi j_i / L_i folded into (-pi, pi].
std::vector<double> torus_frequency(const TorusGrid& grid, Site j);

/// Symbol evaluated at every torus frequency, indexed like sites.
std::vector<double> symbol_on_grid(const KernelSpec& spec, const TorusGrid& grid);

/// a(u) as a per-site table on the torus (site of offset 0 holds 0).
std::vector<double> kernel_table(const KernelSpec& spec, const TorusGrid& grid);

/// n-fold torus-wrapped convolution a * ... * a, indexed by the site of offset u.
std::vector<double> convolution_power(const KernelSpec& spec, int n, const TorusGrid& grid);

/// sum_{z != 0} a(z) (f(x+z) - f(x)). Unscaled: callers multiply by kappa when needed.
double apply_generator(const KernelSpec& spec, const TorusGrid& grid, std::span<const double> f,
                       Site x);

/// Precomputed neighbour lists for a set of jumps with rates on a grid.
/// Used for the kappa-scaled walk, the pair walk on torus^2, and simulation.
class JumpTable {
public:
    JumpTable() = default;
    JumpTable(const TorusGrid& grid, std::vector<LatticeOffset> offsets, std::vector<double> rates);

    /// Single walk with rates scale * a(z).
    static JumpTable from_kernel(const KernelSpec& kernel, const TorusGrid& grid, double scale);
    /// Two independent walks (x, y) on grid x grid, each with rates scale * a(z).
    static JumpTable pair(const KernelSpec& kernel, const TorusGrid& grid, double scale);

    const TorusGrid& grid() const { return grid_; }
    std::size_t jump_count() const { return rates_.size(); }
    double rate(std::size_t e) const { return rates_[e]; }
    double total_rate() const { return total_rate_; }
    const LatticeOffset& offset(std::size_t e) const { return offsets_[e]; }
    Site neighbor(Site x, std::size_t e) const { return neighbors_[x * rates_.size() + e]; }

    /// Index of the jump selected by a uniform variate in [0, total_rate).
    std::size_t pick(double u) const;

    /// out(x) = sum_e rate_e (f(x + z_e) - f(x)).
    void apply(std::span<const double> f, std::span<double> out) const;

private:
    TorusGrid grid_;
    std::vector<LatticeOffset> offsets_;
    std::vector<double> rates_;
    std::vector<double> cumulative_;
    std::vector<Site> neighbors_;
    double total_rate_ = 0.0;
};

} // namespace brw
