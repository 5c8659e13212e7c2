#include "varfrac/func_approx.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "varfrac/error.hpp"
#include "varfrac/parallel.hpp"

namespace varfrac {
namespace {

void check_interval(double lo, double hi)
{
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
        throw InvalidArgument("FuncApprox: domain must satisfy lo < hi");
}

double max_abs(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

} // namespace

std::vector<double> chebyshev_coefficients(std::span<const double> values)
{
    const std::size_t count = values.size();
    if (count == 0)
        throw InvalidArgument("chebyshev_coefficients: no values");
    if (count == 1)
        return {values[0]};

    // Values are ascending, i.e. at x_j = -cos(pi j / N); cosine table over 2N.
    const std::size_t n = count - 1;
    std::vector<double> cos_table(2 * n);
    for (std::size_t m = 0; m < 2 * n; ++m)
        cos_table[m] = std::cos(std::numbers::pi * static_cast<double>(m) / static_cast<double>(n));

    std::vector<double> coeffs(count);
    for (std::size_t k = 0; k <= n; ++k) {
        double sum = 0.0;
        for (std::size_t j = 0; j <= n; ++j) {
            const double w = (j == 0 || j == n) ? 0.5 : 1.0;
            sum += w * values[j] * cos_table[(j * k) % (2 * n)];
        }
        double c = 2.0 * sum / static_cast<double>(n);
        if (k % 2 == 1)
            c = -c;
        if (k == 0 || k == n)
            c *= 0.5;
        coeffs[k] = c;
    }
    return coeffs;
}

std::vector<double> FuncApprox::chebyshev_points(std::size_t count, double lo, double hi)
{
    check_interval(lo, hi);
    if (count == 1)
        return {0.5 * (lo + hi)};
    const std::size_t n = count - 1;
    std::vector<double> pts(count);
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    for (std::size_t j = 0; j <= n; ++j) {
        // sin form keeps the grid exactly symmetric about the midpoint.
        const double x = std::sin(std::numbers::pi * (2.0 * static_cast<double>(j) - static_cast<double>(n)) /
                                  (2.0 * static_cast<double>(n)));
        pts[j] = mid + half * x;
    }
    pts.front() = lo;
    pts.back() = hi;
    return pts;
}

FuncApprox::FuncApprox(std::vector<double> coeffs, double lo, double hi, double tol, double vscale)
    : coeffs_(std::move(coeffs)), lo_(lo), hi_(hi), tol_(tol), vscale_(vscale)
{
    if (coeffs_.empty())
        coeffs_.push_back(0.0);
}

FuncApprox FuncApprox::approximate(const ScalarFn& f, double lo, double hi, double tol)
{
    check_interval(lo, hi);
    if (!(tol >= 1e-15))
        throw InvalidArgument("FuncApprox::approximate: tol must be >= 1e-15");

    std::vector<double> values;
    for (std::size_t count = 17; count <= kMaxPoints; count = 2 * count - 1) {
        const auto pts = chebyshev_points(count, lo, hi);
        std::vector<double> next(count);
        for (std::size_t j = 0; j < count; ++j) {
            if (!values.empty() && j % 2 == 0) {
                next[j] = values[j / 2];
                continue;
            }
            const double v = f(pts[j]);
            if (!std::isfinite(v))
                throw NonFiniteValue("FuncApprox::approximate: non-finite sample at t = " +
                                     std::to_string(pts[j]));
            next[j] = v;
        }
        values = std::move(next);

        auto coeffs = chebyshev_coefficients(values);
        const double vscale = max_abs(values);
        const double cscale = max_abs(coeffs);
        if (cscale == 0.0)
            return FuncApprox({0.0}, lo, hi, tol, 0.0);

        // Plateau test on the tail; the tail length grows with the grid.
        const double cutoff = tol * cscale;
        const std::size_t tail = std::max<std::size_t>(3, count / 8);
        bool plateau = true;
        for (std::size_t k = count - tail; k < count; ++k)
            if (std::abs(coeffs[k]) > cutoff) {
                plateau = false;
                break;
            }
        if (!plateau)
            continue;

        std::size_t last = 0;
        for (std::size_t k = 0; k < count; ++k)
            if (std::abs(coeffs[k]) > cutoff)
                last = k;
        coeffs.resize(std::min(count, last + 3));
        return FuncApprox(std::move(coeffs), lo, hi, tol, vscale);
    }
    throw NonConvergence("FuncApprox::approximate: no coefficient decay with " +
                         std::to_string(kMaxPoints) + " points on [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]");
}

FuncApprox FuncApprox::from_values(std::span<const double> values, double lo, double hi)
{
    check_interval(lo, hi);
    for (double v : values)
        if (!std::isfinite(v))
            throw NonFiniteValue("FuncApprox::from_values: non-finite sample");
    return FuncApprox(chebyshev_coefficients(values), lo, hi, kDefaultTol, max_abs(values));
}

FuncApprox FuncApprox::from_coefficients(std::vector<double> coeffs, double lo, double hi, double tol)
{
    check_interval(lo, hi);
    return FuncApprox(std::move(coeffs), lo, hi, tol, 0.0);
}

double FuncApprox::eval(double t) const
{
    const double slack = 1e-12 * (hi_ - lo_);
    if (!(t >= lo_ - slack && t <= hi_ + slack))
        throw DomainError("FuncApprox::eval: t = " + std::to_string(t) + " outside [" +
                          std::to_string(lo_) + ", " + std::to_string(hi_) + "]");
    const double x = std::clamp((2.0 * t - lo_ - hi_) / (hi_ - lo_), -1.0, 1.0);

    // Clenshaw recurrence.
    double b1 = 0.0;
    double b2 = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 1;) {
        const double b0 = coeffs_[k] + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    return coeffs_[0] + x * b1 - b2;
}

FuncApprox FuncApprox::derivative(int k) const
{
    if (k < 1)
        throw InvalidArgument("FuncApprox::derivative: order must be positive");
    if (k > kMaxDerivativeOrder)
        throw InvalidArgument("FuncApprox::derivative: order " + std::to_string(k) +
                              " exceeds the limit of 8");

    std::vector<double> c = coeffs_;
    const double scale = 2.0 / (hi_ - lo_);
    for (int pass = 0; pass < k; ++pass) {
        const std::size_t m = c.size();
        if (m <= 1) {
            c.assign(1, 0.0);
            continue;
        }
        std::vector<double> d(m - 1, 0.0);
        // d_{j-1} = d_{j+1} + 2 j c_j, run downward.
        double next = 0.0;  // d_{j+1}
        double next2 = 0.0; // d_{j+2}
        for (std::size_t j = m - 1; j >= 1; --j) {
            const double dj = next2 + 2.0 * static_cast<double>(j) * c[j];
            d[j - 1] = dj;
            next2 = next;
            next = dj;
        }
        d[0] *= 0.5;
        for (double& v : d)
            v *= scale;
        c = std::move(d);
    }
    return FuncApprox(std::move(c), lo_, hi_, tol_, 0.0);
}

FuncApprox FuncApprox::antiderivative() const
{
    const std::size_t m = coeffs_.size();
    std::vector<double> b(m + 1, 0.0);
    const double half = 0.5 * (hi_ - lo_);
    auto c = [&](std::size_t j) { return j < m ? coeffs_[j] : 0.0; };
    for (std::size_t k = 1; k <= m; ++k) {
        const double cprev = (k == 1) ? 2.0 * c(0) : c(k - 1);
        b[k] = half * (cprev - c(k + 1)) / (2.0 * static_cast<double>(k));
    }
    // Fix the constant so the value at lo (x = -1) vanishes: T_k(-1) = (-1)^k.
    double at_lo = 0.0;
    for (std::size_t k = 1; k <= m; ++k)
        at_lo += (k % 2 == 0 ? 1.0 : -1.0) * b[k];
    b[0] = -at_lo;
    return FuncApprox(std::move(b), lo_, hi_, tol_, 0.0);
}

double FuncApprox::definite_integral() const
{
    double sum = 0.0;
    for (std::size_t k = 0; k < coeffs_.size(); k += 2)
        sum += coeffs_[k] * 2.0 / (1.0 - static_cast<double>(k * k));
    return 0.5 * (hi_ - lo_) * sum;
}

std::size_t FuncApprox::degree() const
{
    const double cutoff = tol_ * max_abs(coeffs_);
    std::size_t last = 0;
    for (std::size_t k = 0; k < coeffs_.size(); ++k)
        if (std::abs(coeffs_[k]) > cutoff)
            last = k;
    return last;
}



PiecewiseApprox PiecewiseApprox::adaptive(const ScalarFn& f, double lo, double hi, double tol,
                                          int points, double min_width)
{
    check_interval(lo, hi);
    if (points < 5 || points % 2 == 0)
        throw InvalidArgument("PiecewiseApprox: points must be odd and >= 5");
    if (!(tol > 0.0) || !(min_width > 0.0))
        throw InvalidArgument("PiecewiseApprox: tol and min_width must be positive");

    const auto count = static_cast<std::size_t>(points);
    const double narrowest = min_width * (hi - lo);
    PiecewiseApprox out;
    out.breaks_.push_back(lo);
    double scale = 0.0;

    // Depth-first, left half first, so pieces come out in order.
    std::vector<std::pair<double, double>> stack{{lo, hi}};
    while (!stack.empty()) {
        const auto [l, h] = stack.back();
        stack.pop_back();
        const auto pts = FuncApprox::chebyshev_points(count, l, h);
        std::vector<double> values(count);
        parallel_for(count, [&](std::size_t j) { values[j] = f(pts[j]); });
        for (std::size_t j = 0; j < count; ++j)
            if (!std::isfinite(values[j]))
                throw NonFiniteValue("PiecewiseApprox: non-finite sample at t = " + std::to_string(pts[j]));
        out.samples_ += count;
        scale = std::max(scale, max_abs(values));
        const auto coeffs = chebyshev_coefficients(values);
        const double tail = max_abs(std::span<const double>(coeffs).last(3));
        const bool split = tail > tol * scale && h - l > narrowest;
        if (split && out.pieces_.size() + stack.size() + 2 <= kMaxPieces) {
            const double mid = 0.5 * (l + h);
            stack.emplace_back(mid, h);
            stack.emplace_back(l, mid);
            continue;
        }
        if (split)
            out.resolved_ = false;
        out.pieces_.push_back(FuncApprox::from_values(values, l, h));
        out.breaks_.push_back(h);
    }
    return out;
}

PiecewiseApprox::PiecewiseApprox(const FuncApprox& whole)
    : breaks_{whole.lo(), whole.hi()}, pieces_{whole}
{
}

double PiecewiseApprox::eval(double t) const
{
    const double slack = 1e-12 * (hi() - lo());
    if (!(t >= lo() - slack && t <= hi() + slack))
        throw DomainError("PiecewiseApprox::eval: t = " + std::to_string(t) + " outside [" +
                          std::to_string(lo()) + ", " + std::to_string(hi()) + "]");
    const auto it = std::upper_bound(breaks_.begin() + 1, breaks_.end() - 1, t);
    const auto& piece = pieces_[static_cast<std::size_t>(it - breaks_.begin() - 1)];
    return piece.eval(std::clamp(t, piece.lo(), piece.hi()));
}

} // namespace varfrac
