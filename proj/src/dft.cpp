#include "brw/dft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

namespace brw {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

std::vector<std::complex<double>> transform(const TorusGrid& grid,
                                            std::span<const std::complex<double>> in, int sign)
{
    const std::size_t n = grid.size();
    if (in.size() != n) throw InvalidArgument("DFT input size does not match the torus");
    std::vector<std::complex<double>> src(in.begin(), in.end());
    std::vector<std::complex<double>> out(n);
    auto* src_ptr = reinterpret_cast<fftw_complex*>(src.data());
    auto* out_ptr = reinterpret_cast<fftw_complex*>(out.data());
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft(grid.dimension(), grid.sides().data(), src_ptr, out_ptr, sign,
                             FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

} // namespace

// FFTW_BACKWARD carries the e^{+i...} kernel, matching the forward convention above.
std::vector<std::complex<double>> dft_forward(const TorusGrid& grid,
                                              std::span<const std::complex<double>> f)
{
    return transform(grid, f, FFTW_BACKWARD);
}

std::vector<std::complex<double>> dft_inverse(const TorusGrid& grid,
                                              std::span<const std::complex<double>> fhat)
{
    auto out = transform(grid, fhat, FFTW_FORWARD);
    const double scale = 1.0 / static_cast<double>(grid.size());
    for (auto& v : out) v *= scale;
    return out;
}

std::vector<std::complex<double>> dft_forward_real(const TorusGrid& grid, std::span<const double> f)
{
    std::vector<std::complex<double>> c(f.begin(), f.end());
    return dft_forward(grid, c);
}

std::vector<double> dft_inverse_real(const TorusGrid& grid, std::span<const double> fhat)
{
    std::vector<std::complex<double>> c(fhat.begin(), fhat.end());
    auto out = dft_inverse(grid, c);
    std::vector<double> re(out.size());
    std::transform(out.begin(), out.end(), re.begin(), [](auto z) { return z.real(); });
    return re;
}

} // namespace brw
