"""Closed-form frequency-domain kernels of the rank-1 damped modal system.

For the modal matrix A = [[0, Om], [-Om, -nu*Om - gamma*U*U']] every quantity
needed by the norm quadrature reduces to diagonal resolvent kernels

    f_k(s) - i g_k(s) = 1 / (om_k^2 + i s nu om_k - s^2),

their U-weighted scalars f(s), g(s), and two rational coefficients a(s, gamma)
and b(s, gamma) obtained from a Sherman-Morrison reduction of the real
2x2-block linear systems.  The real part of e_j' (i s - A')^{-1} e_k is then
assembled as the table R_jk(s); the oscillatory integrand factors as
h_jk(t, s) = 2 cos(s t) * R_jk(s) with the cosine applied at integration time.

The functions suffixed ``_table`` are vectorized over s-nodes and are the ones
the engine uses; the un-suffixed operations wrap them for a single node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModalSystem


class KernelNumericError(ArithmeticError):
    """Nonfinite intermediate while evaluating kernel coefficients."""

    def __init__(self, s, gamma):
        super().__init__(f"nonfinite kernel value at s={s}, gamma={gamma}")
        self.s = s
        self.gamma = gamma


@dataclass(frozen=True)
class FrequencyKernel:
    """Diagonal resolvent kernels and their U-weighted scalars at one node."""

    s: float
    fdiag: np.ndarray
    gdiag: np.ndarray
    fscalar: float
    gscalar: float


@dataclass(frozen=True)
class XSolution:
    """Real/imaginary parts of the 2r damped solution rows at one node.

    Rows follow the compact map row(j) = j for j <= r and row(j) = r + (j - n)
    for the second block.
    """

    x_re: np.ndarray
    x_im: np.ndarray


def kernel_tables(omega: np.ndarray, nu: float, s: np.ndarray):
    """F and G diagonals for an array of nodes: shapes (n_nodes, n)."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    d1 = omega[None, :] ** 2 - s[:, None] ** 2
    d2 = (nu * s)[:, None] * omega[None, :]
    den = d1 * d1 + d2 * d2
    return d1 / den, d2 / den


def frequency_kernel(modal: ModalSystem, s: float) -> FrequencyKernel:
    F, G = kernel_tables(modal.omega, modal.nu, np.array([s]))
    u2 = modal.U**2
    return FrequencyKernel(
        s=float(s),
        fdiag=F[0],
        gdiag=G[0],
        fscalar=float(F[0] @ u2),
        gscalar=float(G[0] @ u2),
    )


def x_coefficients(
    modal: ModalSystem,
    s: np.ndarray,
    F: np.ndarray,
    G: np.ndarray,
    f: np.ndarray,
    g: np.ndarray,
    gamma: float,
    j: int,
):
    """Scalar coefficients (c_re, c_im) with x_re = c_re*U (+ e_{j-n}), x_im = c_im*U.

    ``j`` is a 1-based row label, either in 1..r or in n+1..n+r.  Vectorized
    over the node arrays; all arithmetic stays real.
    """
    n = modal.n
    s = np.asarray(s, dtype=float)
    x = s * gamma  # appears only through this product
    one_xg = 1.0 + x * g
    if j <= n:
        jj = j - 1
        fj = F[:, jj]
        gj = G[:, jj]
        uw = modal.U[jj] * modal.omega[jj]
        num = gj + x * (f * fj + 2.0 * g * gj) + x * x * g * (f * fj + g * gj)
        den = one_xg * (one_xg * one_xg + (x * f) ** 2)
        a = -gamma * uw * num / den
        c_re = (gamma * fj * uw + x * f * a) / one_xg
        c_im = a
    else:
        m = j - n - 1
        fm = F[:, m]
        gm = G[:, m]
        um = modal.U[m]
        b = -x * um * (fm + x * (g * fm - f * gm)) / (one_xg * one_xg + (x * f) ** 2)
        c_re = (-x * um * gm + x * f * b) / one_xg
        c_im = b
    if not (np.all(np.isfinite(c_re)) and np.all(np.isfinite(c_im))):
        bad = np.nonzero(~(np.isfinite(c_re) & np.isfinite(c_im)))[0][0]
        raise KernelNumericError(float(s[bad]), gamma)
    return c_re, c_im


def x_solution(modal: ModalSystem, kern: FrequencyKernel, gamma: float, r: int) -> XSolution:
    """Solution rows x_j at one node for all j in 1..r, n+1..n+r."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    n = modal.n
    s = np.array([kern.s])
    F = kern.fdiag[None, :]
    G = kern.gdiag[None, :]
    f = np.array([kern.fscalar])
    g = np.array([kern.gscalar])
    x_re = np.zeros((2 * r, n))
    x_im = np.zeros((2 * r, n))
    for row, j in enumerate(list(range(1, r + 1)) + list(range(n + 1, n + r + 1))):
        c_re, c_im = x_coefficients(modal, s, F, G, f, g, gamma, j)
        x_re[row] = c_re[0] * modal.U
        x_im[row] = c_im[0] * modal.U
        if j > n:
            x_re[row, j - n - 1] += 1.0
    return XSolution(x_re=x_re, x_im=x_im)


def r_row_table(
    modal: ModalSystem,
    s: np.ndarray,
    F: np.ndarray,
    G: np.ndarray,
    f: np.ndarray,
    g: np.ndarray,
    gamma: float,
    j: int,
) -> np.ndarray:
    """R_jk(s) for one row j at many nodes: shape (n_nodes, 2n).

    R_jk(s) = Re(e_j' (i s - A')^{-1} e_k); the 2 cos(s t) factor of the full
    integrand is deliberately not included.
    """
    n = modal.n
    s = np.asarray(s, dtype=float)
    c_re, c_im = x_coefficients(modal, s, F, G, f, g, gamma, j)
    omU = modal.omega * modal.U
    R = np.empty((s.size, 2 * n))
    R[:, :n] = (F * c_re[:, None] + G * c_im[:, None]) * omU[None, :]
    R[:, n:] = (G * c_re[:, None] - F * c_im[:, None]) * (s[:, None] * modal.U[None, :])
    if j <= n:
        jj = j - 1
        R[:, jj] += modal.nu * modal.omega[jj] * F[:, jj] + s * G[:, jj]
        R[:, n + jj] -= modal.omega[jj] * F[:, jj]
    else:
        m = j - n - 1
        R[:, m] += modal.omega[m] * F[:, m]
        R[:, n + m] += s * G[:, m]
    return R


def integrand_factors(modal: ModalSystem, kern: FrequencyKernel, xs: XSolution, r: int) -> np.ndarray:
    """Full factor table R (2r x 2n) at the node of ``kern``.

    Assembled from the x-solution rows rather than the scalar coefficients so
    the operation is usable with externally supplied rows as well.
    """
    n = modal.n
    s = kern.s
    fd, gd = kern.fdiag, kern.gdiag
    R = np.empty((2 * r, 2 * n))
    for row, j in enumerate(list(range(1, r + 1)) + list(range(n + 1, n + r + 1))):
        xr, xi = xs.x_re[row], xs.x_im[row]
        R[row, :n] = modal.omega * (fd * xr + gd * xi)
        R[row, n:] = s * (gd * xr - fd * xi)
        if j <= n:
            jj = j - 1
            R[row, jj] += modal.nu * modal.omega[jj] * fd[jj] + s * gd[jj]
            R[row, n + jj] -= modal.omega[jj] * fd[jj]
    return R
