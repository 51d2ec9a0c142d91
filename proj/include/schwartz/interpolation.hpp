#pragma once

#include "schwartz/grid.hpp"

#include <vector>

namespace schwartz {

/// Evaluates the trigonometric interpolant of a Field at arbitrary points.
///
/// The spectrum is zero-padded onto a finer grid (exact band-limited refinement) and the
/// refined samples are then read with a tensor Lagrange stencil; with the default refinement the
/// local stage contributes ~1e-10 relative error on resolved data.
class Interpolator {
public:
    explicit Interpolator(const Field& field, const InterpolationOptions& opts = {});

    int components() const noexcept { return m_; }
    /// All components at x (n coordinates). Points are wrapped periodically.
    void evaluate(const double* x, double* out) const;
    double value(int component, const double* x) const;

private:
    struct Stencil {
        std::array<std::array<int, 16>, kMaxDim> idx{};  ///< wrapped fine-grid indices
        std::array<std::array<double, 16>, kMaxDim> w{};
    };
    void stencil_at(const double* x, Stencil& s) const;
    double apply(const Stencil& s, int component) const;

    int n_;
    int m_;
    int width_;
    std::array<double, 16> inv_den_{};  ///< 1 / Π_{j≠k} (o_k − o_j)
    std::array<int, kMaxDim> fine_{};
    std::array<double, kMaxDim> fine_dx_{};
    std::array<double, kMaxDim> origin_{};
    std::size_t fine_size_ = 0;
    std::vector<double> fine_data_;
};

/// Upsample a field spectrally by integer factors per axis (new grid shares the box).
Field spectral_upsample(const Field& field, int factor);

} // namespace schwartz
