"""Quadrature primitives: Gauss-Legendre in time, composite Simpson on the
smooth outer frequency segment, adaptive Simpson on the dyadic inner segment,
and the frequency truncation radius S_max.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ModalSystem


class QuadratureConfigError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    """Discretization knobs of the fast norm algorithm.

    tol     adaptive Simpson tolerance (inner segment)
    tol_s   resolvent-norm tolerance defining S_max
    n_t     Gauss-Legendre nodes on [0, T]
    n_1     composite-Simpson nodes on the outer segment (odd)
    S1      split point between outer and inner segment (positive)
    b0      initial dyadic level of the adaptive mesh (2^b0 intervals)
    b_max   finest dyadic level (2^b_max intervals)
    gamma_max  largest modal damping strength the S_max bound must cover
    """

    tol: float = 1e-7
    tol_s: float = 0.05
    n_t: int = 20
    n_1: int = 599
    S1: float = 1.0
    b0: int = 8
    b_max: int = 12
    gamma_max: float = 0.0

    def __post_init__(self):
        if self.tol <= 0 or self.tol_s <= 0:
            raise QuadratureConfigError("tolerances must be positive")
        if self.n_t < 1:
            raise QuadratureConfigError("n_t must be >= 1")
        if self.n_1 < 3 or self.n_1 % 2 == 0:
            raise QuadratureConfigError("n_1 must be odd and >= 3")
        if self.S1 <= 0:
            raise QuadratureConfigError("S1 must be positive")
        if self.b0 < 1 or self.b_max < self.b0:
            raise QuadratureConfigError("need b_max >= b0 >= 1")
        if self.gamma_max < 0:
            raise QuadratureConfigError("gamma_max must be nonnegative")


def suggest_spec(
    modal: ModalSystem,
    r: int,
    gamma_max: float,
    tol: float = 1e-7,
    tol_s: float = 0.05,
    n_t: int = 20,
    b0: int = 10,
    b_max: int = 14,
) -> QuadratureSpec:
    """Accuracy-tuned discretization for a given system and damping range.

    The split point S1 must cover both the resonance peaks of the weighted
    modes (narrowest width ~ nu * omega_1, resolved by the dyadic mesh of
    2^b_max intervals) and the damped-system features that large gamma pushes
    past omega_r; the outer Simpson density then tracks the remaining peak
    scale nu * S1.  Calibrated so that the fast value stays within ~1e-4
    relative of the Lyapunov reference across n, r, p, T and viscosity sweeps.
    """
    if not 1 <= r <= modal.n:
        raise QuadratureConfigError("need 1 <= r <= n")
    S1 = min(1.2 * modal.omega_max, max(1024.0 * modal.nu * float(modal.omega[0]), 1.5 * float(modal.omega[r - 1])))
    Smax = s_max(modal.omega_max, modal.nu, gamma_max, tol_s)
    n_1 = max(599, int(np.ceil(8.0 * (Smax - S1) / (modal.nu * S1))))
    n_1 |= 1
    return QuadratureSpec(tol=tol, tol_s=tol_s, n_t=n_t, n_1=n_1, S1=S1, b0=b0, b_max=b_max, gamma_max=gamma_max)


@dataclass(frozen=True)
class TGrid:
    """Gauss-Legendre nodes/weights on [0, T]."""

    T: float
    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class SGrid:
    """Frequency nodes: n_1 equidistant on [-S_max, -S1], dyadic on [-S1, 0]."""

    s_max: float
    S1: float
    outer_nodes: np.ndarray
    inner_nodes: np.ndarray  # 2^b_max + 1 nodes, inner_nodes[0] = -S1, [-1] = 0

    @property
    def nodes(self) -> np.ndarray:
        return np.concatenate([self.outer_nodes, self.inner_nodes])


def s_max(omega_max: float, nu: float, gamma_max: float, eps: float) -> float:
    """Truncation radius: the resolvent norm of A' stays below eps beyond it."""
    if eps <= 0:
        raise QuadratureConfigError("eps must be positive")
    return omega_max + np.sqrt(nu * omega_max**2 + (1.0 + gamma_max * eps) ** 2 / eps**2)


def gauss_legendre(T: float, n_t: int) -> TGrid:
    if T <= 0:
        raise QuadratureConfigError("T must be positive")
    x, w = np.polynomial.legendre.leggauss(n_t)
    return TGrid(T=float(T), nodes=0.5 * T * (x + 1.0), weights=0.5 * T * w)


def simpson_fixed(values: np.ndarray, step: float) -> float:
    """Composite Simpson over equidistant samples (odd count), along axis 0."""
    values = np.asarray(values, dtype=float)
    m = values.shape[0]
    if m < 3 or m % 2 == 0:
        raise QuadratureConfigError("composite Simpson needs an odd node count >= 3")
    w = np.ones(m)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    acc = np.tensordot(w, values, axes=(0, 0)) * (step / 3.0)
    return float(acc) if np.ndim(acc) == 0 else acc


def build_sgrid(S_max: float, S1: float, n_1: int, b_max: int) -> SGrid:
    if S1 >= S_max:
        raise QuadratureConfigError(f"S1={S1} must be below S_max={S_max}")
    outer = np.linspace(-S_max, -S1, n_1)
    inner = np.linspace(-S1, 0.0, 2**b_max + 1)
    return SGrid(s_max=float(S_max), S1=float(S1), outer_nodes=outer, inner_nodes=inner)


@dataclass
class AdaptiveDiagnostics:
    evaluations: int = 0
    max_depth: int = 0
    accepted_intervals: int = 0


class _MemoEvaluator:
    """Memoizing index->value wrapper over the dyadic inner grid."""

    def __init__(self, evaluator):
        self._evaluator = evaluator
        self.cache: dict[int, float] = {}

    def __call__(self, idx: int) -> float:
        v = self.cache.get(idx)
        if v is None:
            v = self._evaluator(idx)
            self.cache[idx] = v
        return v


def simpson_adaptive(
    evaluator,
    length: float,
    tol: float,
    b0: int,
    b_max: int,
    diagnostics: AdaptiveDiagnostics | None = None,
) -> float:
    """Adaptive Simpson on a dyadic grid of 2^b_max intervals over ``length``.

    ``evaluator(i)`` returns the integrand at node i of the full grid
    (0 <= i <= 2^b_max); it is invoked lazily and memoized.  Starting from the
    uniform 2^b0 mesh, a subinterval is refined while the classical Richardson
    error estimate |S_half - S_coarse| exceeds 15 * tol * (width / length);
    converged subintervals contribute S_half + (S_half - S_coarse)/15, while a
    subinterval cut off at the finest level contributes the plain S_half so
    that tol -> 0 reproduces composite Simpson on the full grid exactly.
    """
    if tol <= 0:
        raise QuadratureConfigError("tol must be positive")
    if b_max < b0:
        raise QuadratureConfigError("need b_max >= b0")
    N = 2**b_max
    h = length / N
    ev = evaluator if isinstance(evaluator, _MemoEvaluator) else _MemoEvaluator(evaluator)
    diag = diagnostics if diagnostics is not None else AdaptiveDiagnostics()

    def simpson3(lo, mid, hi):
        return (hi - lo) * h / 6.0 * (ev(lo) + 4.0 * ev(mid) + ev(hi))

    if b_max - b0 < 2:
        # no room for an error estimate below the initial mesh: plain
        # composite Simpson on the finest grid
        vals = np.array([ev(i) for i in range(N + 1)])
        diag.evaluations = len(ev.cache)
        return simpson_fixed(vals, h)

    total = 0.0
    step0 = N >> b0
    # left-to-right, depth-first: deterministic accumulation order
    stack = [(i * step0, (i + 1) * step0) for i in range(2**b0 - 1, -1, -1)]
    while stack:
        lo, hi = stack.pop()
        mid = (lo + hi) >> 1
        q1 = (lo + mid) >> 1
        q3 = (mid + hi) >> 1
        s_c = simpson3(lo, mid, hi)
        s_h = simpson3(lo, q1, mid) + simpson3(mid, q3, hi)
        err = abs(s_h - s_c)
        width = hi - lo
        if err <= 15.0 * tol * (width / N):
            total += s_h + (s_h - s_c) / 15.0
            diag.accepted_intervals += 1
        elif width <= 4:
            total += s_h
            diag.accepted_intervals += 1
        else:
            stack.append((mid, hi))
            stack.append((lo, mid))
        depth = b_max - int(width).bit_length() + 1
        diag.max_depth = max(diag.max_depth, depth)
    diag.evaluations = len(ev.cache)
    return total
