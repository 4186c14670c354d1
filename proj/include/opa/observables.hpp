#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "opa/errors.hpp"
#include "opa/fock.hpp"
#include "opa/parallel.hpp"
#include "opa/special_functions.hpp"

namespace opa {

struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    double step = 0.0;

    void validate() const {
        if (!(step > 0.0) || !(hi > lo))
            throw std::invalid_argument("GridSpec: need hi > lo and step > 0");
    }
    int count() const { return static_cast<int>(std::lround((hi - lo) / step)) + 1; }
    double point(int i) const { return lo + i * step; }
};

enum class Axis { quadrature, photon_number };

struct Distribution1D {
    Axis axis = Axis::quadrature;
    std::vector<double> coords;
    std::vector<double> probs;
    double norm_residual = 0.0;  // |1 - total mass|
};

struct MomentReport {
    double mean_n = 0.0;
    double var_n = 0.0;
    std::optional<double> mandel_q;  // empty for vacuum (mean_n = 0)
};

struct WignerGridSpec {
    GridSpec re;
    GridSpec im;
};

// Phase-space samples W(gamma); values[i_re * im.count() + i_im].
struct WignerGrid {
    GridSpec re;
    GridSpec im;
    std::vector<double> values;

    double value(int i_re, int i_im) const {
        return values[std::size_t(i_re) * im.count() + i_im];
    }

    // Trapezoid integral over the grid; equals Tr rho when the grid covers
    // the support.
    double integral() const {
        const int nr = re.count(), ni = im.count();
        double s = 0.0;
        for (int i = 0; i < nr; ++i) {
            const double wi = (i == 0 || i == nr - 1) ? 0.5 : 1.0;
            for (int j = 0; j < ni; ++j) {
                const double wj = (j == 0 || j == ni - 1) ? 0.5 : 1.0;
                s += wi * wj * value(i, j);
            }
        }
        return s * re.step * im.step;
    }

    double min_value() const {
        double m = std::numeric_limits<double>::infinity();
        for (double v : values) m = std::min(m, v);
        return m;
    }
};

namespace detail {

inline double clip_probability(double p, const char* what) {
    if (p < -1e-9)
        throw numeric_error(std::string(what) + ": negative probability beyond roundoff");
    return p < 0.0 ? 0.0 : p;
}

inline void require_hermitian(const DensityMatrix& rho, const char* what) {
    if (rho.dim < 1)
        throw std::invalid_argument(std::string(what) + ": empty density matrix");
    if (rho.max_hermiticity_defect() > 1e-12)
        throw numeric_error(std::string(what) + ": density matrix is not Hermitian");
}

}  // namespace detail

// Tr(rho a); the phase-space center of mass.
inline cplx mean_annihilation(const DensityMatrix& rho) {
    cplx s(0.0);
    for (int n = 1; n < rho.dim; ++n) s += std::sqrt(double(n)) * rho.at(n, n - 1);
    return s;
}

// Tr(rho a^2); enters the quadrature variance.
inline cplx mean_annihilation_sq(const DensityMatrix& rho) {
    cplx s(0.0);
    for (int n = 2; n < rho.dim; ++n)
        s += std::sqrt(double(n) * (n - 1)) * rho.at(n, n - 2);
    return s;
}

// P(x) = <x| rho |x> on the given grid, via harmonic-oscillator
// eigenfunctions. Emitted with its normalization residual rather than
// renormalized: the residual is the primary truncation diagnostic.
inline Distribution1D quadrature_distribution(const DensityMatrix& rho, const GridSpec& grid) {
    grid.validate();
    detail::require_hermitian(rho, "quadrature_distribution");
    const int dim = rho.dim;
    const int npts = grid.count();

    // the imaginary part of a Hermitian matrix is antisymmetric and drops
    // out of the real quadratic form
    std::vector<double> R(std::size_t(dim) * dim);
    for (std::size_t i = 0; i < R.size(); ++i) R[i] = rho.a[i].real();

    Distribution1D out;
    out.axis = Axis::quadrature;
    out.coords.resize(npts);
    out.probs.resize(npts);
    std::vector<double> raw(npts);
    parallel_for(std::size_t(npts), [&](std::size_t i) {
        const double x = grid.point(static_cast<int>(i));
        std::vector<double> psi(dim);
        hermite_functions(x, std::size_t(dim - 1), psi);
        double p = 0.0;
        for (int m = 0; m < dim; ++m) {
            const double* row = &R[std::size_t(m) * dim];
            double t = 0.0;
            for (int n = 0; n < dim; ++n) t += row[n] * psi[n];
            p += psi[m] * t;
        }
        raw[i] = p;
    });
    if (std::abs(raw.front()) > 1e-12 || std::abs(raw.back()) > 1e-12)
        throw grid_error("quadrature_distribution: boundary density exceeds 1e-12; widen the grid");
    double mass = 0.0;
    for (int i = 0; i < npts; ++i) {
        out.coords[i] = grid.point(i);
        out.probs[i] = detail::clip_probability(raw[i], "quadrature_distribution");
        const double w = (i == 0 || i == npts - 1) ? 0.5 : 1.0;
        mass += w * raw[i];
    }
    out.norm_residual = std::abs(1.0 - mass * grid.step);
    return out;
}

// P(n) = rho[n][n] for n = 0..n_max.
inline Distribution1D photon_distribution(const DensityMatrix& rho) {
    detail::require_hermitian(rho, "photon_distribution");
    Distribution1D out;
    out.axis = Axis::photon_number;
    out.coords.resize(rho.dim);
    out.probs.resize(rho.dim);
    double mass = 0.0, comp = 0.0;
    for (int n = 0; n < rho.dim; ++n) {
        const double p = rho.at(n, n).real();
        out.coords[n] = n;
        out.probs[n] = detail::clip_probability(p, "photon_distribution");
        const double term = p - comp;
        const double next = mass + term;
        comp = (next - mass) - term;
        mass = next;
    }
    out.norm_residual = std::abs(1.0 - mass);
    return out;
}

// Mean, variance and Mandel Q of the photon number. Q = var/mean - 1 is
// undefined for the vacuum and reported empty there.
inline MomentReport moments(const DensityMatrix& rho) {
    detail::require_hermitian(rho, "moments");
    double mean = 0.0;
    for (int n = 0; n < rho.dim; ++n) mean += n * rho.at(n, n).real();
    double var = 0.0;
    for (int n = 0; n < rho.dim; ++n) {
        const double d = n - mean;
        var += d * d * rho.at(n, n).real();
    }
    if (var < -1e-9)
        throw numeric_error("moments: negative variance beyond roundoff");
    MomentReport rep;
    rep.mean_n = mean;
    rep.var_n = std::max(var, 0.0);
    if (mean > 0.0) rep.mandel_q = rep.var_n / mean - 1.0;
    return rep;
}

namespace detail {

// Density-matrix diagonals packed for the Wigner kernel: entry (L, n)
// holds rho(n, n+L) * (-1)^n, contiguous per diagonal.
struct DiagonalPack {
    int dim = 0;
    bool real_only = true;
    std::vector<double> re, im;
    std::vector<std::size_t> offset;

    static DiagonalPack build(const DensityMatrix& rho) {
        DiagonalPack p;
        p.dim = rho.dim;
        p.real_only = rho.max_abs_imag() == 0.0;
        p.offset.resize(std::size_t(rho.dim) + 1);
        std::size_t total = 0;
        for (int L = 0; L <= rho.dim; ++L) {
            p.offset[std::size_t(L)] = total;
            if (L < rho.dim) total += std::size_t(rho.dim - L);
        }
        p.re.resize(total);
        if (!p.real_only) p.im.resize(total);
        for (int L = 0; L < rho.dim; ++L) {
            double* dst = &p.re[p.offset[std::size_t(L)]];
            for (int n = 0; n < rho.dim - L; ++n) {
                const cplx v = rho.at(n, n + L);
                const double sign = (n & 1) ? -1.0 : 1.0;
                dst[n] = sign * v.real();
                if (!p.real_only) p.im[p.offset[std::size_t(L)] + n] = sign * v.imag();
            }
        }
        return p;
    }
};

// x-independent Clenshaw coefficients for the normalized associated
// Laguerre recursion, one row per diagonal L.
struct ClenshawTables {
    int dim = 0;
    std::vector<double> inv_s1;  // 1/sqrt((n+1)(n+1+L))
    std::vector<double> qcoef;   // -sqrt((n+1)(n+1+L)/((n+2)(n+2+L)))
    std::vector<std::size_t> offset;
    std::vector<double> log_fact;

    static ClenshawTables build(int dim) {
        ClenshawTables t;
        t.dim = dim;
        t.log_fact = log_factorials(std::size_t(dim));
        t.offset.resize(std::size_t(dim) + 1);
        std::size_t total = 0;
        for (int L = 0; L <= dim; ++L) {
            t.offset[std::size_t(L)] = total;
            if (L < dim) total += std::size_t(dim - L);
        }
        t.inv_s1.resize(total);
        t.qcoef.resize(total);
        for (int L = 0; L < dim; ++L) {
            double* is = &t.inv_s1[t.offset[std::size_t(L)]];
            double* qc = &t.qcoef[t.offset[std::size_t(L)]];
            for (int n = 0; n < dim - L; ++n) {
                const double s1 = std::sqrt(double(n + 1) * (n + 1 + L));
                const double s2 = std::sqrt(double(n + 2) * (n + 2 + L));
                is[n] = 1.0 / s1;
                qc[n] = -s1 / s2;
            }
        }
        return t;
    }
};

// W(gamma) by Clenshaw summation over the diagonals of rho. Per diagonal
// L the series sum_n c_n f_n is evaluated downward with the normalized
// recursion f_{n+1} = [(2n+L+1-x) f_n - sqrt(n(n+L)) f_{n-1}] /
// sqrt((n+1)(n+1+L)), x = |2 gamma|^2, and scaled by
// exp(-x/2) x^(L/2) / sqrt(L!). Stable where the naive displaced-parity
// recurrences blow up. Far from the origin the downward pass is rescaled
// on the fly: the bare sums reach exp(x/2) while every physical term
// stays below one.
inline double wigner_point_impl(const DiagonalPack& pack, const ClenshawTables& tab,
                                double gre, double gim) {
    const double x = 4.0 * (gre * gre + gim * gim);
    if (x > 4.0e4)
        throw numeric_error("wigner: |gamma| too large (limit 100)");
    const double phi = std::atan2(gim, gre);
    const int dim = pack.dim;
    const double lx = x > 0.0 ? std::log(x) : 0.0;
    const double spill = 2.0 * std::sqrt(x * dim);
    constexpr double rescale_at = 1e250;
    constexpr double rescale_by = 1e-250;
    const double log_rescale = std::log(rescale_at);
    double acc = 0.0;
    for (int L = 0; L < dim; ++L) {
        if (L > 0 && x == 0.0) break;
        const double t = 0.5 * (L * lx - tab.log_fact[std::size_t(L)]);
        // transition amplitudes n -> n+L are bounded by exp(t + 2 sqrt(x dim));
        // past L ~ x this bound decays monotonically in L
        if (L > x && t + spill < -46.0) break;
        const int len = dim - L;
        const double* is = &tab.inv_s1[tab.offset[std::size_t(L)]];
        const double* qc = &tab.qcoef[tab.offset[std::size_t(L)]];
        const double* cr = &pack.re[pack.offset[std::size_t(L)]];
        double shift = 0.0;  // log of the running rescale factor
        double term;
        if (pack.real_only) {
            double b1 = 0.0, b2 = 0.0;
            for (int n = len - 1; n >= 0; --n) {
                const double c = shift == 0.0 ? cr[n] : cr[n] * std::exp(-shift);
                const double b = c + (2.0 * n + L + 1.0 - x) * is[n] * b1 + qc[n] * b2;
                b2 = b1;
                b1 = b;
                if (std::abs(b1) > rescale_at) {
                    b1 *= rescale_by;
                    b2 *= rescale_by;
                    shift += log_rescale;
                }
            }
            term = b1 * std::exp(t - 0.5 * x + shift);
            if (L > 0) term *= 2.0 * std::cos(L * phi);
        } else {
            const double* ci = &pack.im[pack.offset[std::size_t(L)]];
            double b1r = 0.0, b1i = 0.0, b2r = 0.0, b2i = 0.0;
            for (int n = len - 1; n >= 0; --n) {
                const double damp = shift == 0.0 ? 1.0 : std::exp(-shift);
                const double pn = (2.0 * n + L + 1.0 - x) * is[n];
                const double br = cr[n] * damp + pn * b1r + qc[n] * b2r;
                const double bi = ci[n] * damp + pn * b1i + qc[n] * b2i;
                b2r = b1r; b2i = b1i;
                b1r = br;  b1i = bi;
                if (std::max(std::abs(b1r), std::abs(b1i)) > rescale_at) {
                    b1r *= rescale_by; b1i *= rescale_by;
                    b2r *= rescale_by; b2i *= rescale_by;
                    shift += log_rescale;
                }
            }
            const double s = std::exp(t - 0.5 * x + shift);
            term = (L == 0) ? s * b1r
                            : 2.0 * s * (b1r * std::cos(L * phi) - b1i * std::sin(L * phi));
        }
        acc += term;
    }
    const double w = (2.0 / M_PI) * acc;
    if (!std::isfinite(w))
        throw numeric_error("wigner: non-finite value");
    return w;
}

}  // namespace detail

// W at a list of phase-space points (no support/boundary policy applied).
inline std::vector<double> wigner_points(const DensityMatrix& rho,
                                         const std::vector<cplx>& gammas) {
    detail::require_hermitian(rho, "wigner");
    const auto pack = detail::DiagonalPack::build(rho);
    const auto tab = detail::ClenshawTables::build(rho.dim);
    std::vector<double> out(gammas.size());
    parallel_for(gammas.size(), [&](std::size_t i) {
        out[i] = detail::wigner_point_impl(pack, tab, gammas[i].real(), gammas[i].imag());
    });
    return out;
}

inline double wigner_point(const DensityMatrix& rho, cplx gamma) {
    return wigner_points(rho, {gamma})[0];
}

// W(gamma) over a rectangular grid. The grid must cover the state's
// support: the largest |W| on the border has to stay below 1e-8 or the
// trapezoid integral invariant (= Tr rho within 1e-6) cannot hold.
inline WignerGrid wigner(const DensityMatrix& rho, const WignerGridSpec& spec,
                         bool enforce_boundary = true) {
    spec.re.validate();
    spec.im.validate();
    detail::require_hermitian(rho, "wigner");
    const auto pack = detail::DiagonalPack::build(rho);
    const auto tab = detail::ClenshawTables::build(rho.dim);

    WignerGrid grid;
    grid.re = spec.re;
    grid.im = spec.im;
    const int nr = spec.re.count(), ni = spec.im.count();
    grid.values.resize(std::size_t(nr) * ni);
    parallel_for(grid.values.size(), [&](std::size_t idx) {
        const int i = static_cast<int>(idx) / ni;
        const int j = static_cast<int>(idx) % ni;
        grid.values[idx] =
            detail::wigner_point_impl(pack, tab, spec.re.point(i), spec.im.point(j));
    });
    if (enforce_boundary) {
        double edge = 0.0;
        for (int i = 0; i < nr; ++i) {
            edge = std::max(edge, std::abs(grid.value(i, 0)));
            edge = std::max(edge, std::abs(grid.value(i, ni - 1)));
        }
        for (int j = 0; j < ni; ++j) {
            edge = std::max(edge, std::abs(grid.value(0, j)));
            edge = std::max(edge, std::abs(grid.value(nr - 1, j)));
        }
        if (edge > 1e-8)
            throw grid_error("wigner: boundary value exceeds 1e-8; widen the grid");
    }
    return grid;
}

// Grid suggestions from low-order moments; callers widen on grid_error.
inline GridSpec suggest_quadrature_grid(const DensityMatrix& rho, double step = 0.01,
                                        double widen = 1.0) {
    const cplx a1 = mean_annihilation(rho);
    const double mean_n = moments(rho).mean_n;
    const double mean_x = std::sqrt(2.0) * a1.real();
    const double x2 = mean_annihilation_sq(rho).real() + mean_n + 0.5;
    const double var_x = std::max(x2 - mean_x * mean_x, 0.25);
    const double half = (8.0 * std::sqrt(var_x) + 2.0) * widen;
    GridSpec g;
    g.step = step;
    g.lo = std::floor((mean_x - half) / step) * step;
    g.hi = std::ceil((mean_x + half) / step) * step;
    return g;
}

inline WignerGridSpec suggest_wigner_grid(const DensityMatrix& rho, double step = 0.0,
                                          double widen = 1.0) {
    const cplx c = mean_annihilation(rho);
    const double mean_n = moments(rho).mean_n;
    const double sigma =
        std::sqrt(std::max(0.25, 0.5 * (mean_n - std::norm(c) + 0.5)));
    if (step <= 0.0) step = sigma >= 1.25 ? 0.25 : (sigma >= 0.5 ? 0.1 : 0.05);
    const double half = (6.8 * sigma + 1.0) * widen;
    auto span = [&](double center) {
        GridSpec g;
        g.step = step;
        g.lo = std::floor((center - half) / step) * step;
        g.hi = std::ceil((center + half) / step) * step;
        return g;
    };
    return WignerGridSpec{span(c.real()), span(c.imag())};
}

// Trapezoid mean and variance of a sampled distribution.
inline std::pair<double, double> distribution_moments(const Distribution1D& d) {
    const std::size_t n = d.coords.size();
    double mass = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = (d.axis == Axis::quadrature && (i == 0 || i == n - 1)) ? 0.5 : 1.0;
        mass += w * d.probs[i];
        mean += w * d.probs[i] * d.coords[i];
    }
    mean /= mass;
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = (d.axis == Axis::quadrature && (i == 0 || i == n - 1)) ? 0.5 : 1.0;
        const double dx = d.coords[i] - mean;
        var += w * d.probs[i] * dx * dx;
    }
    var /= mass;
    return {mean, var};
}

}  // namespace opa
