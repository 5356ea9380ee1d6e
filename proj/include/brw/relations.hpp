#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "brw/kernel.hpp"
#include "brw/model.hpp"

namespace brw {

/// c + sum_i w_i n(site_i): an affine function of the particle field.
struct LinearForm {
    double constant = 0.0;
    std::vector<std::pair<Site, double>> terms;

    void add(Site site, double weight) { terms.emplace_back(site, weight); }
    double evaluate(std::span<const std::int64_t> counts) const;
};

struct SitePower {
    Site site;
    int power;
};

/// Conditional moments of the one-step increments xi(dt, x) given the field,
/// per unit dt, as affine forms in n(t, .):
///   mean(x)           E xi(x)
///   power(x, p)       E xi(x)^p, p >= 2 (the n(t,x) factor is on the branching term)
///   mixed(x,p,y,q)    E xi(x)^p xi(y)^q, x != y
///   three or more distinct sites: 0.
class XiRelations {
public:
    XiRelations(const ModelParams& params, const TorusGrid& grid);

    LinearForm mean(Site x) const;
    LinearForm power(Site x, int p) const;
    LinearForm mixed(Site x, int p, Site y, int q) const;
    /// Dispatches on the number of distinct sites; powers must be >= 1.
    LinearForm moment(std::span<const SitePower> factors) const;

    /// a(y - x) on the torus.
    double kernel_weight(Site x, Site y) const;

private:
    ModelParams params_;
    TorusGrid grid_;
    DerivedRates rates_;
    JumpTable walk_;
};

} // namespace brw
