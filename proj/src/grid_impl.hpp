#pragma once

#include "schwartz/grid.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

namespace schwartz::detail {

// FFTW plans are created lazily and reused for every transform on the grid. Real data go
// through r2c/c2r plans on the half spectrum (last axis P/2+1); `neg_outer` maps an index over
// the leading axes to the index of its negated wavenumbers, for Hermitian completion.
struct FftCache {
    FftCache() = default;
    FftCache(const FftCache&) = delete;
    FftCache& operator=(const FftCache&) = delete;
    ~FftCache();

    void ensure(const GridData& g);

    std::mutex mutex;
    fftw_complex* buf = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    double* real = nullptr;
    fftw_complex* half = nullptr;
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
    std::size_t outer = 1;
    int last = 1;
    int half_last = 1;
    std::vector<std::size_t> neg_outer;
};

struct GridData {
    int n = 1;
    bool periodic = false;
    std::array<double, kMaxDim> L{};
    std::array<double, kMaxDim> dx{};
    std::array<int, kMaxDim> P{1, 1, 1};
    std::size_t total = 0;
    std::array<std::vector<double>, kMaxDim> x;
    std::array<std::vector<double>, kMaxDim> xi;

    mutable FftCache cache;
    mutable std::mutex refined_mutex;
    mutable std::map<int, Grid> refined;  // upsampled companions keyed by factor
};

} // namespace schwartz::detail
