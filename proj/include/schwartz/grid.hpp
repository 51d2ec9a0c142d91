#pragma once

// Periodic box grids, sampled fields, Fourier machinery and Schwartz seminorms.

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace schwartz {

inline constexpr int kMaxDim = 3;
inline constexpr int kDefaultMaxOrder = 4;
inline constexpr double kDefaultDecayTol = 1e-8;

using MultiIndex = std::array<int, kMaxDim>;

int order(const MultiIndex& a) noexcept;

/// All multi-indices in n dimensions with |γ| = k, in lexicographically decreasing order.
std::vector<MultiIndex> multi_indices_of_order(int n, int k);

struct MultiIndexPair {
    MultiIndex alpha{};
    MultiIndex beta{};

    /// Column label "a<α>_b<β>", e.g. a10_b01.
    std::string label(int n) const;
    friend bool operator==(const MultiIndexPair&, const MultiIndexPair&) = default;
};

/// Every (α,β) with |α| ≤ max_alpha and |β| ≤ max_beta.
std::vector<MultiIndexPair> all_pairs(int n, int max_alpha, int max_beta);

namespace detail {
struct GridData;
}

class Grid {
public:
    Grid() = default;

    int dim() const noexcept;
    double half_width(int axis) const;
    int points(int axis) const;
    double spacing(int axis) const;
    bool periodic_native() const noexcept;
    std::size_t size() const noexcept;
    bool valid() const noexcept { return data_ != nullptr; }

    std::span<const double> coords(int axis) const;
    /// ξ for each FFT-ordered index (0..P/2−1, then −P/2..−1).
    std::span<const double> wavenumbers(int axis) const;

    std::array<int, kMaxDim> unravel(std::size_t idx) const noexcept;
    void position(std::size_t idx, double* x) const noexcept;
    double cell_volume() const noexcept;

    bool same_as(const Grid& other) const noexcept;

    const detail::GridData& impl() const { return *data_; }

private:
    friend Grid make_grid(int, std::span<const double>, std::span<const int>, bool);
    std::shared_ptr<const detail::GridData> data_;
};

Grid make_grid(int n, std::span<const double> half_widths, std::span<const int> points,
               bool periodic_native);
/// Convenience: isotropic box.
Grid make_grid(int n, double half_width, int points, bool periodic_native);

/// m-component real samples on a Grid, component-major.
class Field {
public:
    Field() = default;
    Field(Grid grid, int components, double time = 0.0);
    Field(Grid grid, int components, std::vector<double> data, double time = 0.0);

    const Grid& grid() const noexcept { return grid_; }
    int components() const noexcept { return m_; }
    double time() const noexcept { return t_; }
    void set_time(double t) noexcept { t_ = t; }
    std::size_t points() const noexcept { return grid_.size(); }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    std::span<const double> component(int c) const;
    std::span<double> component(int c);

    double max_abs() const noexcept;
    bool all_finite() const noexcept;

private:
    Grid grid_;
    int m_ = 0;
    double t_ = 0.0;
    std::vector<double> data_;
};

using PointFn = std::function<void(std::span<const double> x, std::span<double> out)>;

Field sample_field(const PointFn& fn, const Grid& grid, int m, double t = 0.0);
Field sample_scalar(const std::function<double(std::span<const double>)>& fn, const Grid& grid,
                    double t = 0.0);

Field abs(const Field& f);
/// a·x + b·y on identical grids and component counts.
Field combine(double a, const Field& x, double b, const Field& y);
Field scaled(const Field& f, double s);
double max_abs_difference(const Field& a, const Field& b);

// ---------------------------------------------------------------- spectral

/// Fourier coefficients of every component (FFTW ordering, unnormalized forward transform).
class Spectrum {
public:
    explicit Spectrum(const Field& f);

    const Grid& grid() const noexcept { return grid_; }
    int components() const noexcept { return m_; }
    std::span<const std::complex<double>> component(int c) const;
    std::span<std::complex<double>> component(int c);

    /// Inverse transform of Π(iξ)^β · f̂ (Nyquist dropped along odd-order axes).
    Field derivative(const MultiIndex& beta, double time) const;
    /// Inverse transform after multiplying by an arbitrary real per-mode factor.
    Field apply(const std::function<double(const double* xi)>& multiplier, double time) const;
    Field to_field(double time) const;

private:
    Grid grid_;
    int m_;
    std::vector<std::complex<double>> coeffs_;
};

namespace fft {
void forward(const Grid& grid, const double* in, std::complex<double>* out);
void forward(const Grid& grid, const std::complex<double>* in, std::complex<double>* out);
/// Normalized inverse, real part written to out.
void inverse_real(const Grid& grid, const std::complex<double>* in, double* out);
} // namespace fft

Field spectral_derivative(const Field& field, const MultiIndex& beta,
                          int max_order = kDefaultMaxOrder);

struct InterpolationOptions {
    int upsample = 0;  ///< 0 → 4 in 1D, 2 otherwise
    int stencil = 6;   ///< local Lagrange points per axis on the refined grid
};

/// field(x + displacement(x)) by Fourier interpolation.
Field interpolate_shifted(const Field& field, const Field& displacement,
                          const InterpolationOptions& opts = {});

struct DecayReport {
    bool pass = true;
    double ratio = 0.0;
    double tol = kDefaultDecayTol;
};

DecayReport decay_guard(const Field& field, double tol = kDefaultDecayTol);

/// max over grid points and components of |x^α ∂^β f|.
double weighted_seminorm(const Field& field, const MultiIndexPair& pair,
                         double decay_tol = kDefaultDecayTol);
/// Same quantity with the maximum located between grid points by local search on the interpolant.
double weighted_seminorm_refined(const Field& field, const MultiIndexPair& pair,
                                 double decay_tol = kDefaultDecayTol);

/// Evaluates several seminorms sharing one forward transform. No decay check.
std::vector<double> seminorms(const Field& field, std::span<const MultiIndexPair> pairs);

/// x^α at a point.
double monomial(const double* x, const MultiIndex& alpha, int n) noexcept;

} // namespace schwartz
