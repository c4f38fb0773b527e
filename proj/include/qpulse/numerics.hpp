#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <queue>
#include <type_traits>
#include <vector>

#include "qpulse/errors.hpp"
#include "qpulse/params.hpp"

namespace qpulse {

using cplx = std::complex<double>;

template <class T>
struct QuadratureResult {
    T value;
    double abs_error_estimate;
    long evaluations;
};

struct RootResult {
    double root;
    double residual;
    double bracket_lo;
    double bracket_hi;
    int iterations;
};

namespace detail {

inline double abs_of(double x) { return std::abs(x); }
inline double abs_of(const cplx& x) { return std::abs(x); }

// Gauss-Kronrod 7-15 pair on [-1, 1]. Abscissae and weights from QUADPACK,
// 33 significant digits. Even indices of xgk are the Kronrod extension,
// odd indices the embedded Gauss-Legendre 7 nodes.
inline constexpr std::array<double, 8> gk15_x = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> gk15_wk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gk15_wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T, class F>
void gk15_panel(F& f, double a, double b, T& kron, double& err) {
    const double h = 0.5 * (b - a);
    const double c = 0.5 * (a + b);
    T resk = gk15_wk[7] * f(c);
    T resg = gk15_wg[3] * f(c);
    for (int i = 0; i < 7; ++i) {
        const double dx = h * gk15_x[i];
        const T s = f(c - dx) + f(c + dx);
        resk += gk15_wk[i] * s;
        if (i % 2 == 1) resg += gk15_wg[i / 2] * s;
    }
    kron = resk * h;
    err = abs_of((resk - resg) * h);
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod quadrature of f over [a, b]. The target is
// |value - exact| <= max(tol, tol * |value|). Integrands with known step
// discontinuities should be split at the breakpoints by the caller.
template <class F, class T = std::invoke_result_t<F, double>>
QuadratureResult<T> integrate(F f, double a, double b, double tol = 1e-10,
                              int max_panels = 4096) {
    if (!(a < b)) throw validation_error("integrate: requires a < b");
    struct Panel {
        double a, b, err;
        T val;
        bool operator<(const Panel& o) const { return err < o.err; }
    };
    std::priority_queue<Panel> heap;
    long evals = 0;
    auto make_panel = [&](double lo, double hi) {
        T v;
        double e;
        detail::gk15_panel(f, lo, hi, v, e);
        evals += 15;
        return Panel{lo, hi, e, v};
    };
    heap.push(make_panel(a, b));
    T total = heap.top().val;
    double total_err = heap.top().err;
    int panels = 1;
    while (true) {
        const double target = std::max(tol, tol * detail::abs_of(total));
        if (total_err <= target) break;
        if (panels >= max_panels)
            throw max_subdivisions_error(
                "integrate: error target unreachable within panel budget");
        Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Panel left = make_panel(worst.a, mid);
        Panel right = make_panel(mid, worst.b);
        total += left.val + right.val - worst.val;
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        ++panels;
    }
    return {total, total_err, evals};
}

// Brent's method on a sign-changing bracket, safeguarded by bisection.
// Iterates until both |g(root)| <= tol and the bracket has collapsed to
// tol * max(1, |root|).
template <class G>
RootResult find_root(G g, double lo, double hi, double tol = default_root_tol,
                     int max_iter = 256) {
    double a = lo, b = hi;
    double fa = g(a), fb = g(b);
    if (fa == 0.0) return {a, 0.0, a, a, 0};
    if (fb == 0.0) return {b, 0.0, b, b, 0};
    if (fa * fb > 0.0)
        throw no_sign_change_error("find_root: g(lo) and g(hi) have equal sign");
    double c = a, fc = fa;
    double d = b - a, e = d;
    int iter = 0;
    const double eps = std::numeric_limits<double>::epsilon();
    for (; iter < max_iter; ++iter) {
        if (fb * fc > 0.0) {
            c = a;
            fc = fa;
            e = d = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2.0 * eps * std::abs(b) + 0.5 * tol * std::max(1.0, std::abs(b));
        const double xm = 0.5 * (c - b);
        if ((std::abs(xm) <= tol1 && std::abs(fb) <= tol) || fb == 0.0) break;
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            // inverse quadratic / secant step
            const double s = fb / fa;
            double p, q;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                q = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
                q = (q - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            const double min1 = 3.0 * xm * q - std::abs(tol1 * q);
            const double min2 = std::abs(e * q);
            if (2.0 * p < std::min(min1, min2)) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if (std::abs(d) > tol1)
            b += d;
        else
            b += (xm > 0.0 ? tol1 : -tol1);
        fb = g(b);
    }
    if (std::abs(fb) > tol)
        throw error("find_root: residual target not reached; g may be "
                    "discontinuous or the tolerance below what the bracket "
                    "supports");
    const double blo = std::min(b, c), bhi = std::max(b, c);
    return {b, fb, blo, bhi, iter};
}

inline double erfc_real(double x) { return std::erfc(x); }

namespace detail {

// Weideman's rational approximation of the Faddeeva function, N = 48.
// Coefficients are the real DFT of exp(-t^2)(L^2+t^2) sampled along the
// tangent grid t = L tan(theta/2); see Weideman, SIAM J. Numer. Anal. 31
// (1994) 1497. Valid in the closed upper half plane.
inline constexpr double weideman_L = 5.825901260487881;
inline constexpr std::array<double, 48> weideman_a = {
    3.194064589395071,      2.9304498956237564,     2.5370484874446908,
    2.0707599716742919,     1.5913084691178008,     1.1492204645397783,
    0.77806241914842289,    0.49225702391399073,    0.28979989079604829,
    0.15786330443380481,    0.078955895534700227,   0.035861369983376717,
    0.014546837792237557,   0.0051258135482258639,  0.0014864991251956356,
    0.00030786913640886619, 1.7506316371146354e-05, -1.9054461618984307e-05,
    -9.4756382403851334e-06, -1.9445657789319261e-06, 1.9494337483322261e-07,
    2.6549492017089926e-07, 6.9270006358871891e-08, -6.3868099518349109e-09,
    -9.5962547526903269e-09, -2.0156599753747294e-09, 5.7752897655739286e-10,
    3.8794210668839534e-10, 2.1621977623864713e-11, -4.3865882662554397e-11,
    -1.1935494328759351e-11, 3.4254258518412531e-12, 2.2154904726186045e-12,
    -9.6432764464304552e-14, -3.226848307383478e-13, -3.193942374316958e-14,
    4.2343104696919383e-14, 9.6048404827117244e-15, -5.297944345174826e-15,
    -1.9426648606382171e-15, 6.5544810181918915e-16, 3.4839124551595773e-16,
    -8.3042615498912873e-17, -5.9805823062946813e-17, 1.1239721046711718e-17,
    1.0143644768076384e-17, -1.700241470370992e-18, -1.722992942473381e-18};

inline cplx faddeeva_uhp(cplx z) {
    const double L = weideman_L;
    const cplx iz(-z.imag(), z.real());
    const cplx den = L - iz;
    const cplx Z = (L + iz) / den;
    cplx p = 0.0;
    for (int n = 47; n >= 0; --n) p = p * Z + weideman_a[n];
    constexpr double inv_sqrt_pi = 0.564189583547756286948;
    return 2.0 * p / (den * den) + inv_sqrt_pi / den;
}

}  // namespace detail

// Faddeeva function w(z) = exp(-z^2) erfc(-iz). The rational approximation
// covers Im(z) >= 0; the lower half plane goes through the reflection
// w(z) = 2 exp(-z^2) - w(-z). On the real axis Re(w) = exp(-x^2) exactly,
// which the approximation cannot resolve once it underflows the O(1)
// imaginary part, so that component is patched analytically.
inline cplx faddeeva(cplx z) {
    if (z.imag() < 0.0) return 2.0 * std::exp(-z * z) - detail::faddeeva_uhp(-z);
    cplx w = detail::faddeeva_uhp(z);
    if (z.imag() == 0.0) w = cplx(std::exp(-z.real() * z.real()), w.imag());
    return w;
}

namespace detail {

// Stable primitives for exponential moments over a finite window.
// I_j(x) = int_0^1 v^j exp(x v) dv, j = 0, 1, 2.
inline std::array<cplx, 3> exp01_moments(cplx x) {
    std::array<cplx, 3> out;
    if (std::abs(x) <= 1.0) {
        // I_j = sum_n x^n / (n! (n + j + 1))
        for (int j = 0; j < 3; ++j) {
            cplx sum = 0.0, term = 1.0;
            for (int n = 0;; ++n) {
                const cplx c = term / double(n + j + 1);
                sum += c;
                if (std::abs(c) <= 1e-18 * (std::abs(sum) + 1e-300) || n > 40) break;
                term *= x / double(n + 1);
            }
            out[j] = sum;
        }
        return out;
    }
    const cplx x2 = x * x, x3 = x2 * x;
    if (x.real() <= 0.0) {
        const cplx ex = std::exp(x);
        out[0] = (ex - 1.0) / x;
        out[1] = (ex * (x - 1.0) + 1.0) / x2;
        out[2] = (ex * (x2 - 2.0 * x + 2.0) - 2.0) / x3;
    } else {
        // anchored at v = 1 so nothing overflows; caller multiplies exp(x) back
        // in through the p_hi endpoint value
        const cplx ex = std::exp(-x);
        out[0] = (1.0 - ex) / x;
        out[1] = (x - 1.0 + ex) / x2;
        out[2] = (x2 - 2.0 * x + 2.0 - 2.0 * ex) / x3;
    }
    return out;
}

// int_lo^hi tau^k exp(p(tau)) dtau for affine p with slope m and endpoint
// values p_lo, p_hi. The caller guarantees Re(p) <= 0 at both endpoints
// (true of every causal kernel-times-pulse product in this library), which
// keeps all intermediates bounded.
inline cplx powexp_window(int k, double lo, double hi, cplx p_lo, cplx p_hi,
                          cplx m) {
    const double L = hi - lo;
    if (!(L > 0.0)) return 0.0;
    const cplx x = m * L;
    const auto mom = exp01_moments(x);
    const bool anchored_hi = !(std::abs(x) <= 1.0) && x.real() > 0.0;
    const cplx anchor = std::exp(anchored_hi ? p_hi : p_lo);
    cplx total = 0.0;
    for (int j = 0; j <= k; ++j) {
        double binom = 1.0;
        for (int i = 0; i < j; ++i) binom *= double(k - i) / double(i + 1);
        total += binom * std::pow(lo, k - j) * std::pow(L, j + 1) * mom[j];
    }
    return anchor * total;
}

}  // namespace detail

}  // namespace qpulse
