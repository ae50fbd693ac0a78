"""Compiled inner loops: Drury/polar flow of the Evans system with Dormand-Prince 5(4)."""

import numpy as np
from numba import njit

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

OK, UNDERFLOW, TOO_MANY_STEPS, TOO_MANY_REORTH = 0, 1, 2, 3


@njit(cache=True)
def profile_value(x, x0, dx, vals, ders, left, right):
    """Cubic Hermite interpolant of the profile table; endstates outside the table."""
    n = vals.shape[0]
    t = (x - x0) / dx
    if t < 0.0:
        return left
    if t > n - 1:
        return right
    i = int(t)
    if i >= n - 1:
        i = n - 2
    s = t - i
    s2 = s * s
    s3 = s2 * s
    return ((2 * s3 - 3 * s2 + 1) * vals[i] + (s3 - 2 * s2 + s) * dx * ders[i]
            + (-2 * s3 + 3 * s2) * vals[i + 1] + (s3 - s2) * dx * ders[i + 1])


@njit(cache=True)
def _rhs(x, y, out, lam, mu, sigma, mu0, b1, x0, dx, vals, ders, left, right):
    """Polar flow ``Omega' = A Omega - Omega (Omega^* A Omega)``, ``(log rho)' = tr(Omega^* A Omega)``.

    ``y`` packs ``Omega`` (4x2, row-major) followed by ``log rho``.
    """
    v = profile_value(x, x0, dx, vals, ders, left, right)
    AO = np.empty((4, 2), dtype=np.complex128)
    for j in range(2):
        w0 = y[j]
        w1 = y[2 + j]
        w2 = y[4 + j]
        w3 = y[6 + j]
        AO[0, j] = w1 / mu
        AO[1, j] = lam * v * w0 + v / mu * w1 - sigma * b1 * v * w3
        AO[2, j] = sigma * mu0 * v * w3
        AO[3, j] = -b1 * v / mu * w1 + lam * v * w2 + sigma * mu0 * v * v * w3
    M00 = 0j
    M01 = 0j
    M10 = 0j
    M11 = 0j
    for i in range(4):
        c0 = np.conj(y[2 * i])
        c1 = np.conj(y[2 * i + 1])
        M00 += c0 * AO[i, 0]
        M01 += c0 * AO[i, 1]
        M10 += c1 * AO[i, 0]
        M11 += c1 * AO[i, 1]
    for i in range(4):
        o0 = y[2 * i]
        o1 = y[2 * i + 1]
        out[2 * i] = AO[i, 0] - (o0 * M00 + o1 * M10)
        out[2 * i + 1] = AO[i, 1] - (o0 * M01 + o1 * M11)
    out[8] = M00 + M11


@njit(cache=True)
def orth_defect(y):
    """Max-entry deviation of ``Omega^* Omega`` from the identity."""
    g00 = 0.0
    g11 = 0.0
    g01 = 0j
    for i in range(4):
        g00 += abs(y[2 * i]) ** 2
        g11 += abs(y[2 * i + 1]) ** 2
        g01 += np.conj(y[2 * i]) * y[2 * i + 1]
    return max(abs(g00 - 1.0), abs(g11 - 1.0), abs(g01))


@njit(cache=True)
def reorthonormalize(y):
    """Modified Gram-Schmidt on the two columns; the removed determinant goes into ``log rho``."""
    r00 = 0.0
    for i in range(4):
        r00 += abs(y[2 * i]) ** 2
    r00 = np.sqrt(r00)
    for i in range(4):
        y[2 * i] /= r00
    r01 = 0j
    for i in range(4):
        r01 += np.conj(y[2 * i]) * y[2 * i + 1]
    for i in range(4):
        y[2 * i + 1] -= r01 * y[2 * i]
    r11 = 0.0
    for i in range(4):
        r11 += abs(y[2 * i + 1]) ** 2
    r11 = np.sqrt(r11)
    for i in range(4):
        y[2 * i + 1] /= r11
    y[8] += np.log(r00 * r11)


@njit(cache=True)
def polar_shoot(y0, x_from, x_to, lam, mu, sigma, mu0, b1, x0, dx, vals, ders, left, right,
                rtol, atol, orth_tol, max_steps, max_reorth):
    """Integrate the polar flow from ``x_from`` to ``x_to``.

    Returns ``(y, status, n_accepted, n_rejected, n_reorth)``.
    """
    y = y0.copy()
    n = 9
    k1 = np.empty(n, dtype=np.complex128)
    k2 = np.empty(n, dtype=np.complex128)
    k3 = np.empty(n, dtype=np.complex128)
    k4 = np.empty(n, dtype=np.complex128)
    k5 = np.empty(n, dtype=np.complex128)
    k6 = np.empty(n, dtype=np.complex128)
    k7 = np.empty(n, dtype=np.complex128)
    yt = np.empty(n, dtype=np.complex128)
    yn = np.empty(n, dtype=np.complex128)
    span = x_to - x_from
    if span == 0.0:
        return y, OK, 0, 0, 0
    direction = 1.0 if span > 0 else -1.0
    x = x_from
    h = direction * min(0.05, abs(span))
    _rhs(x, y, k1, lam, mu, sigma, mu0, b1, x0, dx, vals, ders, left, right)
    n_acc = 0
    n_rej = 0
    n_reorth = 0
    while (x_to - x) * direction > 0.0:
        if (x + h - x_to) * direction > 0.0:
            h = x_to - x
        for i in range(n):
            yt[i] = y[i] + h * A21 * k1[i]
        _rhs(x + C2 * h, yt, k2, lam, mu, sigma, mu0, b1, x0, dx, vals, ders, left, right)
        for i in range(n):
            yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
        _rhs(x + C3 * h, yt, k3, lam, mu, sigma, mu0, b1, x0, dx, vals, ders, left, right)
        for i in range(n):
            yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        _rhs(x + C4 * h, yt, k4, lam, mu, sigma, mu0, b1, x0, dx, vals, ders, left, right)
        for i in range(n):
            yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        _rhs(x + C5 * h, yt, k5, lam, mu, sigma, mu0, b1, x0, dx, vals, ders, left, right)
        for i in range(n):
            yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
        _rhs(x + h, yt, k6, lam, mu, sigma, mu0, b1, x0, dx, vals, ders, left, right)
        for i in range(n):
            yn[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
        _rhs(x + h, yn, k7, lam, mu, sigma, mu0, b1, x0, dx, vals, ders, left, right)
        err = 0.0
        for i in range(n):
            e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(yn[i]))
            err += (abs(e) / sc) ** 2
        err = np.sqrt(err / n)
        if err <= 1.0:
            x = x + h
            for i in range(n):
                y[i] = yn[i]
                k1[i] = k7[i]
            n_acc += 1
            if orth_defect(y) > orth_tol:
                reorthonormalize(y)
                n_reorth += 1
                if n_reorth > max_reorth:
                    return y, TOO_MANY_REORTH, n_acc, n_rej, n_reorth
                _rhs(x, y, k1, lam, mu, sigma, mu0, b1, x0, dx, vals, ders, left, right)
            fac = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
        else:
            n_rej += 1
            fac = max(0.2, 0.9 * err ** -0.2)
        h *= fac
        if abs(h) < 1e-13 * max(1.0, abs(x)):
            return y, UNDERFLOW, n_acc, n_rej, n_reorth
        if n_acc + n_rej > max_steps:
            return y, TOO_MANY_STEPS, n_acc, n_rej, n_reorth
    return y, OK, n_acc, n_rej, n_reorth
