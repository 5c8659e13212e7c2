"""High-precision reference values frozen into the C++ tests.

Run with `python3 tests/oracles/reference_values.py`; add `--perturbed` for
the Euler-Lagrange residuals of the perturbed first example (a few
minutes). Every integral is computed with mpmath in the variable
u = -log(s / d), where s is the distance from the kernel base and d the
operator distance. That removes the endpoint singularity for any kernel
exponent above -1, so the values are independent of the graded
Gauss-Legendre code path they check.
"""
import sys

from mpmath import mp, mpf, quad, gamma, diff, exp, inf

mp.dps = 30
BREAKS = [0, 1, 5, 20, 100, inf]


def left_int(kernel_order, fn, a, t):
    """int_a^t (t-tau)^(q-1) fn(tau) / Gamma(q) dtau with q = kernel_order(t, tau)."""
    d = t - a

    def g(u):
        s = d * exp(-u)
        q = kernel_order(t, t - s)
        return s**q * fn(t - s) / gamma(q)
    return quad(g, BREAKS)


def right_int(kernel_order, fn, b, t):
    """int_t^b (tau-t)^(q-1) fn(tau) / Gamma(q) dtau with q = kernel_order(tau, t)."""
    d = b - t

    def g(u):
        s = d * exp(-u)
        q = kernel_order(t + s, t)
        return s**q * fn(t + s) / gamma(q)
    return quad(g, BREAKS)


# Second derivative by a fixed-step 9-point stencil; mpmath's diff raises the
# working precision of the nested quadratures and is far slower.
STEP = mpf("1e-3")
STENCIL = [mpf(-1) / 560, mpf(8) / 315, mpf(-1) / 5, mpf(8) / 5, mpf(-205) / 72,
           mpf(8) / 5, mpf(-1) / 5, mpf(8) / 315, mpf(-1) / 560]


def second_derivative(F, t):
    return sum(w * F(t + (i - 4) * STEP) for i, w in enumerate(STENCIL)) / STEP**2


def left_rl_d2(order, g, base, t):
    """Second derivative of the order-(2 - order) left RL integral of g."""
    def F(tt):
        L = tt - base
        q = lambda v: 2 - order(tt, base + L * v)
        return quad(lambda v: (L * (1 - v)) ** (q(v) - 1) * g(base + L * v) * L / gamma(q(v)),
                    [0, mpf("0.5"), 1])
    return second_derivative(F, t)


def right_rl_d2(order, g, top, t):
    """Second derivative of the order-(2 - order) right RL integral of g."""
    def F(tt):
        L = top - tt
        q = lambda v: 2 - order(tt + L * v, tt)
        return quad(lambda v: (L * v) ** (q(v) - 1) * g(tt + L * v) * L / gamma(q(v)),
                    [0, mpf("0.5"), 1])
    return second_derivative(F, t)


def perturbed_first_example():
    """x = 1 + 2t + t^2/10 in the first example problem file: x'' = 1/5, the
    partial in x is t^2/5 and the partial in the second combined derivative
    is g = 2 * (0.7 * left Caputo(alpha2) + 0.3 * right Caputo(beta2)) of x."""
    mp.dps = 20
    a2 = lambda t, tau: mpf("1.5") + mpf("0.1") * t * tau
    b2 = lambda t, tau: mpf("1.4") + mpf("0.1") * (t + tau) / 3
    c = mpf("0.2")

    def g(tau):
        lc = left_int(lambda t, s: 2 - a2(t, s), lambda s: c, 0, tau)
        rc = right_int(lambda t, s: 2 - b2(t, s), lambda s: c, mpf("1.5"), tau)
        return 2 * (mpf("0.7") * lc + mpf("0.3") * rc)

    t = mpf("0.5")
    inner = c * t**2 + mpf("0.3") * left_rl_d2(b2, g, 0, t) + mpf("0.7") * right_rl_d2(a2, g, 1, t)
    show("perturbed inner residual t=0.5", inner)
    t = mpf("1.25")
    outer = mpf("0.3") * (left_rl_d2(b2, g, 0, t) - left_rl_d2(b2, g, 1, t))
    show("perturbed outer residual t=1.25", outer)


def show(name, v):
    print(f"{name} = {mp.nstr(v, 20)}")


if __name__ == "__main__":
    show("gamma(4.82)", gamma(mpf("4.82")))
    show("gamma(0.1)", gamma(mpf("0.1")))
    show("gamma(7.3)", gamma(mpf("7.3")))
    show("gamma(49.5)", gamma(mpf("49.5")))

    # Lemma closed forms.
    t = mpf("0.3")
    show("right power gamma=4 alpha=t^2/2 b=1 t=0.3",
         gamma(5) / gamma(5 - t**2 / 2) * (1 - t) ** (4 - t**2 / 2))

    # Caputo n=1 is the RL integral of order 1-alpha applied to x'.
    a21 = lambda t, tau: t**2 / 2
    one_minus = lambda f: (lambda t, tau: 1 - f(t, tau))
    show("ex2.1 left caputo t=0.6",
         left_int(one_minus(a21), lambda s: 4 * s**3, 0, mpf("0.6")))
    show("ex2.1 right caputo t=0.6",
         -right_int(one_minus(a21), lambda s: 4 * s**3, 1, mpf("0.6")))
    show("ex2.2 left caputo t=0.6", left_int(one_minus(a21), exp, 0, mpf("0.6")))
    show("ex2.2 right caputo t=0.6", -right_int(one_minus(a21), exp, 1, mpf("0.6")))

    a23 = lambda t, tau: (t**2 + tau**2) / 4
    sq = lambda s: s**2
    show("ex2.3 left rl integral t=0.6", left_int(a23, sq, 0, mpf("0.6")))
    show("ex2.3 right rl integral t=0.6", right_int(a23, sq, 1, mpf("0.6")))
    show("ex2.3 right rl integral t=0.9", right_int(a23, sq, 1, mpf("0.9")))

    beta24 = lambda t, tau: (t + tau) / 3
    for label, a24 in (("/4", lambda t, tau: (t**2 + tau**2) / 4),
                       ("/0.4", lambda t, tau: (t**2 + tau**2) / mpf("0.4"))):
        lc = left_int(one_minus(a24), lambda s: 1, 0, mpf("0.4"))
        rc = -right_int(one_minus(beta24), lambda s: 1, 1, mpf("0.4"))
        show(f"ex2.4 {label} combined t=0.4", mpf("0.8") * lc + mpf("0.2") * rc)

    # Left RL derivative, n=1, alpha = t^2/2, x = t^4 at t = 0.5:
    # d/ds of the order-(1-alpha) RL integral.
    I = lambda s: left_int(one_minus(a21), lambda u: u**4, 0, s)
    show("left rl derivative alpha=t^2/2 x=t^4 t=0.5", diff(I, mpf("0.5")))
    J = lambda s: right_int(one_minus(a21), lambda u: u**4, 1, s)
    show("right rl derivative alpha=t^2/2 x=t^4 t=0.5", -diff(J, mpf("0.5")))

    if "--perturbed" in sys.argv:
        perturbed_first_example()
