#include "schwartz/interpolation.hpp"

#include "grid_impl.hpp"

#include <cmath>
#include <stdexcept>

namespace schwartz {

namespace {

Grid refined_grid(const Grid& g, int factor) {
    const auto& d = g.impl();
    std::lock_guard lock(d.refined_mutex);
    auto it = d.refined.find(factor);
    if (it != d.refined.end()) return it->second;
    std::array<double, kMaxDim> L{};
    std::array<int, kMaxDim> P{};
    for (int i = 0; i < g.dim(); ++i) {
        L[i] = g.half_width(i);
        P[i] = g.points(i) * factor;
    }
    Grid r = make_grid(g.dim(), std::span<const double>(L.data(), g.dim()),
                       std::span<const int>(P.data(), g.dim()), g.periodic_native());
    d.refined.emplace(factor, r);
    return r;
}

// Target slots on the refined axis for a coarse FFT index; the Nyquist mode is split evenly
// between ±P/2 so the refined interpolant stays real and passes through the coarse samples.
int targets(int j, int P, int Pf, std::array<int, 2>& idx, std::array<double, 2>& w) {
    const int k = j < P / 2 ? j : j - P;
    if (j == P / 2) {
        idx = {P / 2, Pf - P / 2};
        w = {0.5, 0.5};
        return 2;
    }
    idx[0] = k >= 0 ? k : Pf + k;
    w[0] = 1.0;
    return 1;
}

} // namespace

Field spectral_upsample(const Field& field, int factor) {
    if (factor < 1) throw std::invalid_argument("upsample factor must be >= 1");
    if (factor == 1) return field;
    const Grid& g = field.grid();
    const int n = g.dim();
    Grid fine = refined_grid(g, factor);
    const std::size_t Nf = fine.size();
    const double scale = static_cast<double>(Nf) / static_cast<double>(g.size());

    Spectrum s(field);
    Field out(fine, field.components(), field.time());
    std::vector<std::complex<double>> big(Nf);
    const int P0 = g.points(0), P1 = n > 1 ? g.points(1) : 1, P2 = n > 2 ? g.points(2) : 1;
    const int F1 = n > 1 ? fine.points(1) : 1, F2 = n > 2 ? fine.points(2) : 1;
    for (int c = 0; c < field.components(); ++c) {
        std::fill(big.begin(), big.end(), std::complex<double>(0.0, 0.0));
        auto src = s.component(c);
        std::size_t idx = 0;
        for (int a = 0; a < P0; ++a) {
            std::array<int, 2> ia{}, ib{0, 0}, ic{0, 0};
            std::array<double, 2> wa{}, wb{1, 0}, wc{1, 0};
            const int na = targets(a, P0, fine.points(0), ia, wa);
            for (int b = 0; b < P1; ++b) {
                const int nb = n > 1 ? targets(b, P1, F1, ib, wb) : 1;
                for (int cc = 0; cc < P2; ++cc, ++idx) {
                    const int nc = n > 2 ? targets(cc, P2, F2, ic, wc) : 1;
                    const std::complex<double> v = src[idx] * scale;
                    for (int p = 0; p < na; ++p)
                        for (int q = 0; q < nb; ++q)
                            for (int r = 0; r < nc; ++r) {
                                const std::size_t t =
                                    (static_cast<std::size_t>(ia[p]) * F1 + ib[q]) * F2 + ic[r];
                                big[t] += v * (wa[p] * wb[q] * wc[r]);
                            }
                }
            }
        }
        fft::inverse_real(fine, big.data(), out.component(c).data());
    }
    return out;
}

Interpolator::Interpolator(const Field& field, const InterpolationOptions& opts)
    : n_(field.grid().dim()), m_(field.components()), width_(opts.stencil) {
    if (width_ < 2 || width_ > 16 || width_ % 2 != 0)
        throw std::invalid_argument("interpolation stencil must be even, 2..16");
    const int factor = opts.upsample > 0 ? opts.upsample : (n_ == 1 ? 4 : 2);
    Field fine = spectral_upsample(field, factor);
    const Grid& fg = fine.grid();
    for (int i = 0; i < n_; ++i) {
        fine_[i] = fg.points(i);
        fine_dx_[i] = fg.spacing(i);
        origin_[i] = -fg.half_width(i);
    }
    for (int i = n_; i < kMaxDim; ++i) fine_[i] = 1;
    for (int k = 0; k < width_; ++k) {
        double den = 1.0;
        for (int j = 0; j < width_; ++j)
            if (j != k) den *= static_cast<double>(k - j);
        inv_den_[k] = 1.0 / den;
    }
    fine_size_ = fg.size();
    auto d = fine.data();
    fine_data_.assign(d.begin(), d.end());
}

void Interpolator::stencil_at(const double* x, Stencil& s) const {
    const int half = width_ / 2 - 1;
    const int W = width_;
    for (int i = 0; i < n_; ++i) {
        const double pos = (x[i] - origin_[i]) / fine_dx_[i];
        const double fl = std::floor(pos);
        const double u = pos - fl;
        long wrapped = (static_cast<long>(fl) - half) % fine_[i];
        if (wrapped < 0) wrapped += fine_[i];
        for (int k = 0; k < W; ++k) {
            long j = wrapped + k;
            if (j >= fine_[i]) j -= fine_[i];
            s.idx[i][k] = static_cast<int>(j);
        }
        // Lagrange weights on nodes −half..W−1−half at u, via prefix/suffix products.
        std::array<double, 17> pre{}, suf{};
        pre[0] = 1.0;
        for (int k = 0; k < W; ++k) pre[k + 1] = pre[k] * (u - (k - half));
        suf[W] = 1.0;
        for (int k = W - 1; k >= 0; --k) suf[k] = suf[k + 1] * (u - (k - half));
        for (int k = 0; k < W; ++k) s.w[i][k] = pre[k] * suf[k + 1] * inv_den_[k];
    }
}

double Interpolator::value(int component, const double* x) const {
    Stencil s;
    stencil_at(x, s);
    return apply(s, component);
}

double Interpolator::apply(const Stencil& s, int component) const {
    const double* data = fine_data_.data() + static_cast<std::size_t>(component) * fine_size_;
    const int W = width_;
    if (n_ == 1) {
        double acc = 0.0;
        for (int a = 0; a < W; ++a) acc += s.w[0][a] * data[s.idx[0][a]];
        return acc;
    }
    if (n_ == 2) {
        double acc = 0.0;
        for (int a = 0; a < W; ++a) {
            const double* row = data + static_cast<std::size_t>(s.idx[0][a]) * fine_[1];
            double r = 0.0;
            for (int b = 0; b < W; ++b) r += s.w[1][b] * row[s.idx[1][b]];
            acc += s.w[0][a] * r;
        }
        return acc;
    }
    double acc = 0.0;
    for (int a = 0; a < W; ++a) {
        const std::size_t pa = static_cast<std::size_t>(s.idx[0][a]) * fine_[1];
        double ra = 0.0;
        for (int b = 0; b < W; ++b) {
            const double* row = data + (pa + s.idx[1][b]) * fine_[2];
            double rb = 0.0;
            for (int c = 0; c < W; ++c) rb += s.w[2][c] * row[s.idx[2][c]];
            ra += s.w[1][b] * rb;
        }
        acc += s.w[0][a] * ra;
    }
    return acc;
}

void Interpolator::evaluate(const double* x, double* out) const {
    Stencil s;
    stencil_at(x, s);
    for (int c = 0; c < m_; ++c) out[c] = apply(s, c);
}

} // namespace schwartz
