#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace varfrac {

using ScalarFn = std::function<double(double)>;

// Chebyshev-T expansion of a smooth function on [lo, hi]. Immutable once
// built; every member is safe to call concurrently.
//
// Objects returned by approximate() carry an adaptive truncation
// certificate: the two trailing coefficients are at most
// construction_tol() * max|coeff|. Derived objects (derivative(),
// antiderivative(), interpolants of fixed size) do not.
class FuncApprox {
public:
    static constexpr double kDefaultTol = 1e-13;
    static constexpr std::size_t kMaxPoints = (std::size_t{1} << 14) + 1;
    static constexpr int kMaxDerivativeOrder = 8;

    // Adaptive construction: 17 Chebyshev points, doubled until the
    // coefficient tail falls below tol relative to the largest coefficient.
    // Throws NonConvergence past 2^14 + 1 points and NonFiniteValue on a
    // non-finite sample.
    static FuncApprox approximate(const ScalarFn& f, double lo, double hi,
                                  double tol = kDefaultTol);

    // Fixed-size interpolant through values sampled at chebyshev_points().
    static FuncApprox from_values(std::span<const double> values, double lo, double hi);

    static FuncApprox from_coefficients(std::vector<double> coeffs, double lo, double hi,
                                        double tol = kDefaultTol);

    // Chebyshev points of the second kind, ascending, endpoints included.
    // The (2m-1)-point set contains the m-point set at even indices.
    static std::vector<double> chebyshev_points(std::size_t count, double lo, double hi);

    double eval(double t) const;
    double operator()(double t) const { return eval(t); }

    // k-fold derivative, 1 <= k <= 8.
    FuncApprox derivative(int k = 1) const;
    // Indefinite integral vanishing at lo.
    FuncApprox antiderivative() const;
    double definite_integral() const;

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double construction_tol() const { return tol_; }
    std::span<const double> coefficients() const { return coeffs_; }
    // Index of the last coefficient above construction_tol * max|coeff|.
    std::size_t degree() const;
    // Largest value on the Chebyshev grid the object was built from.
    double vscale() const { return vscale_; }

private:
    FuncApprox(std::vector<double> coeffs, double lo, double hi, double tol, double vscale);

    std::vector<double> coeffs_;
    double lo_;
    double hi_;
    double tol_;
    double vscale_;
};

// Piecewise Chebyshev interpolant for functions with algebraic endpoint or
// interior singularities. Each piece is split in half until its last three
// coefficients fall below tol times the largest sampled value, so the
// pieces grade geometrically toward singular points. Pieces narrower than
// min_width * (hi - lo) are kept as they are.
class PiecewiseApprox {
public:
    static constexpr int kDefaultPoints = 33;
    static constexpr double kDefaultTol = 1e-12;
    static constexpr double kDefaultMinWidth = 1e-10;
    static constexpr std::size_t kMaxPieces = 4096;

    // Samples of a piece are taken in parallel, so f must be thread-safe.
    // Throws NonFiniteValue on a non-finite sample. resolved() is false when
    // the piece budget ran out before every piece met the tolerance.
    static PiecewiseApprox adaptive(const ScalarFn& f, double lo, double hi, double tol = kDefaultTol,
                                    int points = kDefaultPoints, double min_width = kDefaultMinWidth);

    explicit PiecewiseApprox(const FuncApprox& whole);

    double eval(double t) const;
    double operator()(double t) const { return eval(t); }

    double lo() const { return breaks_.front(); }
    double hi() const { return breaks_.back(); }
    std::size_t pieces() const { return pieces_.size(); }
    std::size_t samples() const { return samples_; }
    bool resolved() const { return resolved_; }
    const std::vector<double>& breaks() const { return breaks_; }

private:
    PiecewiseApprox() = default;

    std::vector<double> breaks_;
    std::vector<FuncApprox> pieces_;
    std::size_t samples_ = 0;
    bool resolved_ = true;
};

// Chebyshev coefficients of values sampled at chebyshev_points(values.size()).
std::vector<double> chebyshev_coefficients(std::span<const double> values);

} // namespace varfrac
