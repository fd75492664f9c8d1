"""Independent reference values for the regression constants in the tests.

Uses scipy adaptive quadrature and ODE integration of the Clairaut-form
geodesic equations, sharing no code with the Rust crate.

    python3 tools/oracle.py
"""
import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

HALF_PI = np.pi / 2


def theta(a, u):
    return HALF_PI * (1.0 + np.sinh(a * (u - HALF_PI)) / np.sinh(a * HALF_PI))


def theta_prime(a, u):
    return HALF_PI * a * np.cosh(a * (u - HALF_PI)) / np.sinh(a * HALF_PI)


def f(a, t):
    return quad(lambda u: np.cos(theta(a, u)), 0.0, t, epsabs=1e-14, epsrel=1e-13, limit=400)[0]


def steepness(r):
    return brentq(lambda a: f(a, HALF_PI) - r, 1e-6, 64.0, xtol=1e-15, rtol=1e-15)


def curvature(a, t):
    w = min(t, np.pi - t)
    if w < 1e-9:
        return theta_prime(a, 0.0) ** 2
    return theta_prime(a, w) * np.sin(theta(a, w)) / f(a, w)


class Profile:
    """Tabulated f, f' and K on a fine grid with spline lookup."""

    def __init__(self, a, n=20001):
        from scipy.interpolate import CubicSpline

        self.a = a
        t = np.linspace(0.0, np.pi, n)
        fv = np.array([f(a, min(x, np.pi - x)) for x in t])
        kv = np.array([curvature(a, x) for x in t])
        self.f = CubicSpline(t, fv)
        self.k = CubicSpline(t, kv)

    def fprime(self, t):
        return np.cos(theta(self.a, t))


def first_zero_along(profile, t0, alpha, reach, y0, y0p):
    """Jacobi solution along the geodesic from (t0, .) with angle alpha from
    the meridian; state (t, psi, y, y'), psi the angle to the meridian."""

    def rhs(s, z):
        t, psi, y, yp = z
        tt = min(max(t, 1e-12), np.pi - 1e-12)
        return [np.cos(psi), -profile.fprime(tt) / profile.f(tt) * np.sin(psi), yp, -profile.k(tt) * y]

    if abs(np.sin(alpha)) < 1e-15:
        # meridian: t(s) reflected into [0, pi]
        def rhs_m(s, z):
            t = t0 + (s if np.cos(alpha) > 0 else -s)
            t = np.mod(t, 2 * np.pi)
            t = 2 * np.pi - t if t > np.pi else t
            return [z[1], -profile.k(t) * z[0]]

        ev = lambda s, z: z[0]
        ev.terminal, ev.direction = False, 0
        sol = solve_ivp(rhs_m, (0, reach), [y0, y0p], rtol=1e-12, atol=1e-13, events=ev, max_step=1e-3)
    else:
        ev = lambda s, z: z[2]
        ev.terminal, ev.direction = False, 0
        sol = solve_ivp(rhs, (0, reach), [t0, alpha, y0, y0p], rtol=1e-12, atol=1e-13, events=ev, max_step=1e-3)
    hits = [s for s in sol.t_events[0] if s > 1e-9]
    return hits[0] if hits else None


def main():
    a = steepness(0.5)
    g = Profile(a)
    print(f"steepness a(0.5)           = {a:.15f}")
    print(f"family(0.5).f(pi/4)        = {f(a, np.pi / 4):.15f}")
    print(f"family(0.5).K(pi/2)        = {curvature(a, HALF_PI):.15f}")
    kmin = min(curvature(a, t) for t in np.linspace(0, np.pi, 4097))
    print(f"family(0.5) min K          = {kmin:.15f}")
    z = first_zero_along(g, HALF_PI, 0.0, 4 * np.pi, 0.0, 1.0)
    print(f"meridian from equator, (0,1) first zero = {z:.12f}")
    z = first_zero_along(g, 0.0, 0.0, 2 * np.pi, 0.0, 1.0)
    print(f"meridian from pole, (0,1) first zero    = {z:.12f}")
    # focal fan of 16: 4 start latitudes x 4 directions in [0, pi)
    reach = HALF_PI / np.sqrt(kmin) * 1.05 + 0.01
    best = np.inf
    for j in range(4):
        t0 = np.pi * j / 3
        for k in range(4):
            alpha = np.pi * k / 4
            if t0 in (0.0, np.pi) and k > 0:
                alpha = 0.0  # every direction at a pole is a meridian
            zz = first_zero_along(g, t0, alpha, reach, 1.0, 0.0)
            if zz is not None:
                best = min(best, zz)
    print(f"family(0.5) focal fan(16)  = {best:.12f}")


if __name__ == "__main__":
    main()
