"""Dense reference computations of the same norm.

Three independent routes: the Lyapunov route
trace(X - exp(AT) X exp(A'T)) with A X + X A' = -Z, its dual with the
transposed equation, and brute-force Simpson quadrature of
trace(exp(At) Z exp(A't)) in time.  These target correctness, not speed, and
serve as the timing baseline for the benchmark harness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .engine import NormProblem
from .model import ModalSystem

_KRON_LIMIT = 60  # Kronecker vectorization below, Bartels-Stewart above


class LyapunovSolveError(RuntimeError):
    """Residual of the Lyapunov solve exceeded the acceptance threshold."""


class BruteForceError(RuntimeError):
    """Quadrature of the trace integrand failed to converge."""


@dataclass(frozen=True)
class StateSpace:
    """First-order modal realization A and the low-rank weight Z (diagonal)."""

    A: np.ndarray
    z_diag: np.ndarray

    @property
    def Z(self) -> np.ndarray:
        return np.diag(self.z_diag)


def build_state_space(modal: ModalSystem, problem: NormProblem, viscosity: float) -> StateSpace:
    n = modal.n
    if problem.r > n:
        raise ValueError("r exceeds the number of modes")
    gamma = viscosity * modal.gamma_per_viscosity
    Om = np.diag(modal.omega)
    D = gamma * np.outer(modal.U, modal.U)
    A = np.block([[np.zeros((n, n)), Om], [-Om, -modal.nu * Om - D]])
    z = np.zeros(2 * n)
    z[: problem.r] = problem.p
    z[n : n + problem.r] = 1.0
    return StateSpace(A=A, z_diag=z)


def expm(A: np.ndarray, t: float = 1.0) -> np.ndarray:
    """exp(A t) via Pade scaling-and-squaring."""
    E = sla.expm(np.asarray(A, dtype=float) * t)
    if not np.all(np.isfinite(E)):
        raise ArithmeticError("matrix exponential overflowed")
    return E


def lyap(A: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Solve A X + X A' = -W for symmetric W, with a residual check."""
    A = np.asarray(A, dtype=float)
    W = np.asarray(W, dtype=float)
    m = A.shape[0]
    if m <= _KRON_LIMIT:
        lhs = np.kron(np.eye(m), A) + np.kron(A, np.eye(m))
        X = np.linalg.solve(lhs, -W.reshape(-1, order="F")).reshape((m, m), order="F")
    else:
        X = sla.solve_continuous_lyapunov(A, -W)
    X = 0.5 * (X + X.T)
    res = np.linalg.norm(A @ X + X @ A.T + W, "fro")
    # backward-error scale: the residual of a correctly rounded solution is
    # bounded by eps * (2 ||A|| ||X|| + ||W||), not by eps * ||W|| alone
    scale = 2.0 * np.linalg.norm(A, "fro") * np.linalg.norm(X, "fro") + np.linalg.norm(W, "fro")
    if res > 1e-9 * max(scale, 1e-300):
        raise LyapunovSolveError(f"Lyapunov residual {res:.3e} exceeds 1e-9 * backward scale {1e-9 * scale:.3e}")
    return X


def _trace_weighted(P: np.ndarray, z_diag: np.ndarray) -> float:
    """trace(P diag(z) P') for the 0/1/p pattern of Z."""
    cols = np.nonzero(z_diag)[0]
    return float(np.einsum("j,ij,ij->", z_diag[cols], P[:, cols], P[:, cols]))


def norm_reference(modal: ModalSystem, problem: NormProblem, viscosity: float) -> float:
    """trace(X - exp(AT) X exp(A'T)) with A X + X A' = -Z."""
    ss = build_state_space(modal, problem, viscosity)
    X = lyap(ss.A, ss.Z)
    E = expm(ss.A, problem.T)
    return float(np.trace(X) - np.einsum("ij,ij->", E @ X, E))


def norm_reference_dual(modal: ModalSystem, problem: NormProblem, viscosity: float) -> float:
    """Dual route: trace(Z (Y - exp(AT) Y exp(A'T))) with A' Y + Y A = -I."""
    ss = build_state_space(modal, problem, viscosity)
    Y = lyap(ss.A.T, np.eye(ss.A.shape[0]))
    E = expm(ss.A, problem.T)
    M = Y - E.T @ Y @ E
    return float(ss.z_diag @ np.diag(M))


def norm_bruteforce(
    modal: ModalSystem,
    problem: NormProblem,
    viscosity: float,
    n_nodes: int = 64,
    rtol: float = 1e-9,
    max_doublings: int = 14,
) -> float:
    """Composite Simpson in time of trace(exp(At) Z exp(A't)), node-doubling
    until successive values agree to ``rtol`` relative."""
    ss = build_state_space(modal, problem, viscosity)
    if not np.any(ss.z_diag):
        return 0.0
    if n_nodes % 2:
        n_nodes += 1

    def simpson_value(m: int) -> float:
        h = problem.T / m
        Eh = expm(ss.A, h)
        P = np.eye(ss.A.shape[0])
        w_end = h / 3.0
        total = w_end * _trace_weighted(P, ss.z_diag)
        for i in range(1, m):
            P = P @ Eh
            w = (4.0 if i % 2 else 2.0) * h / 3.0
            total += w * _trace_weighted(P, ss.z_diag)
        P = P @ Eh
        total += w_end * _trace_weighted(P, ss.z_diag)
        return total

    prev = simpson_value(n_nodes)
    for _ in range(max_doublings):
        n_nodes *= 2
        cur = simpson_value(n_nodes)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise BruteForceError(f"no convergence to rtol={rtol} after {max_doublings} doublings")
