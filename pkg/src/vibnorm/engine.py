"""Fast evaluation of the finite horizon p-mixed H2 norm.

Offline part (viscosity independent): frequency grid split into a smooth
outer Simpson segment [-S_max, -S1] and a dyadic inner segment [-S1, 0],
Gauss-Legendre nodes in time, diagonal kernel tables F/G and their U-weighted
scalars, and the cos(s_i t_l) table.

Online part (per viscosity): for each of the 2r output rows the factor table
R_jk(s) is evaluated lazily per s-node and shared across all time nodes; the
inner s-integral uses per-(j, k) adaptive Simpson refinement driven by the
maximum error over the time nodes, the outer one plain composite Simpson.
Sweep drivers recycle the offline tables across viscosities and the R tables
across time horizons.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .kernels import kernel_tables, r_row_table
from .model import ModalSystem
from .quad import QuadratureSpec, SGrid, TGrid, build_sgrid, gauss_legendre, s_max

_FOUR_PI_SQ = 4.0 * np.pi**2


class GammaRangeError(ValueError):
    """Requested viscosity exceeds the gamma_max the S_max bound was built for."""


@dataclass(frozen=True)
class NormProblem:
    """Norm parameters: mixing weight p, damped mode count r, horizon T."""

    p: float
    r: int
    T: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ValueError("p must lie in [0, 1]")
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if self.T <= 0:
            raise ValueError("T must be positive")


@dataclass
class NormValue:
    """Nonnegative norm value plus cost diagnostics."""

    value: float
    inner_nodes_per_row: list = field(default_factory=list)
    inner_nodes_max: int = 0
    adaptive_depth_max: int = 0
    timings: dict = field(default_factory=dict)


@dataclass(frozen=True)
class OfflineTables:
    sgrid: SGrid
    tgrid: TGrid
    F_table: np.ndarray  # (n_s, n) rows = diag F(s_i)
    G_table: np.ndarray
    f_vec: np.ndarray  # (n_s,) U-weighted scalars
    g_vec: np.ndarray
    cos_table: np.ndarray  # (n_s, n_t) cos(s_i * t_l)
    s_max: float

    @property
    def n_outer(self) -> int:
        return self.sgrid.outer_nodes.size


def offline(modal: ModalSystem, problem: NormProblem, spec: QuadratureSpec) -> OfflineTables:
    """Precompute everything that does not depend on the viscosity."""
    S_max = s_max(modal.omega_max, modal.nu, spec.gamma_max, spec.tol_s)
    sgrid = build_sgrid(S_max, spec.S1, spec.n_1, spec.b_max)
    tgrid = gauss_legendre(problem.T, spec.n_t)
    s_all = sgrid.nodes
    F, G = kernel_tables(modal.omega, modal.nu, s_all)
    u2 = modal.U**2
    return OfflineTables(
        sgrid=sgrid,
        tgrid=tgrid,
        F_table=F,
        G_table=G,
        f_vec=F @ u2,
        g_vec=G @ u2,
        cos_table=np.cos(np.outer(s_all, tgrid.nodes)),
        s_max=S_max,
    )


class _LazyRowTable:
    """Per-row R_jk values on the inner dyadic grid, evaluated on demand."""

    def __init__(self, modal, s_in, F_in, G_in, f_in, g_in, gamma, j):
        self._args = (modal, s_in, F_in, G_in, f_in, g_in, gamma, j)
        self.R = np.empty((s_in.size, 2 * modal.n))
        self.have = np.zeros(s_in.size, dtype=bool)

    def ensure(self, idxs) -> None:
        need = [i for i in idxs if not self.have[i]]
        if not need:
            return
        modal, s_in, F_in, G_in, f_in, g_in, gamma, j = self._args
        need = np.array(need)
        self.R[need] = r_row_table(modal, s_in[need], F_in[need], G_in[need], f_in[need], g_in[need], gamma, j)
        self.have[need] = True

    @property
    def evaluated(self) -> int:
        return int(self.have.sum())


_W_COARSE = np.array([1.0, 0.0, 4.0, 0.0, 1.0]) / 6.0
_W_HALF = np.array([1.0, 4.0, 2.0, 4.0, 1.0]) / 12.0


def _inner_integrals(lazy: _LazyRowTable, cosw2: np.ndarray, spec: QuadratureSpec):
    """Adaptive inner s-integrals of h = 2 cos(st) R for one row.

    Returns (I, max_depth) with I of shape (2n, n_t).  Refinement decisions
    are per column k, using the max Richardson error estimate over the time
    nodes; accepted subintervals add the extrapolated Simpson value, except at
    the depth cap where the plain half-interval value keeps the tol -> 0 limit
    equal to full-grid composite Simpson.
    """
    N = 2**spec.b_max
    h = spec.S1 / N
    n_cols = lazy.R.shape[1]
    n_t = cosw2.shape[1]
    acc = np.zeros((n_cols, n_t))
    max_depth = 0

    if spec.b_max - spec.b0 < 2:
        lazy.ensure(range(N + 1))
        w = np.ones(N + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= h / 3.0
        return lazy.R.T @ (w[:, None] * cosw2), spec.b0

    step0 = N >> spec.b0
    all_k = np.arange(n_cols)
    stack = [(i * step0, (i + 1) * step0, all_k) for i in range(2**spec.b0 - 1, -1, -1)]
    while stack:
        lo, hi, kidx = stack.pop()
        width = hi - lo
        mid = (lo + hi) >> 1
        q1 = (lo + mid) >> 1
        q3 = (mid + hi) >> 1
        nodes = (lo, q1, mid, q3, hi)
        lazy.ensure(nodes)
        Rv = lazy.R[list(nodes)][:, kidx]  # (5, nk)
        c = cosw2[list(nodes)]  # (5, n_t)
        ws = width * h
        S_c = Rv.T @ ((ws * _W_COARSE)[:, None] * c)
        S_h = Rv.T @ ((ws * _W_HALF)[:, None] * c)
        err = np.abs(S_h - S_c).max(axis=1)
        done = err <= 15.0 * spec.tol * (width / N)
        max_depth = max(max_depth, spec.b_max - int(width).bit_length() + 1)
        if width <= 4:
            corr = np.where(done[:, None], (S_h - S_c) / 15.0, 0.0)
            acc[kidx] += S_h + corr
        else:
            acc[kidx[done]] += S_h[done] + (S_h[done] - S_c[done]) / 15.0
            rest = kidx[~done]
            if rest.size:
                stack.append((mid, hi, rest))
                stack.append((lo, mid, rest))
    return acc, max_depth


def _row_labels(n: int, r: int) -> list[int]:
    return list(range(1, r + 1)) + list(range(n + 1, n + r + 1))


def _outer_cos_weights(tables: OfflineTables) -> np.ndarray:
    """Simpson-weighted 2 cos(s_i t_l) over the outer nodes: (n_1, n_t)."""
    n1 = tables.n_outer
    step = (tables.sgrid.s_max - tables.sgrid.S1) / (n1 - 1)
    w = np.ones(n1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= step / 3.0
    return (2.0 * tables.cos_table[:n1]) * w[:, None]


def _row_contribution(modal, problem, spec, tables, gamma, j, cos_out_w, cosw2_in, eta):
    """Time-weighted squared s-integrals for one compact row j."""
    n1 = tables.n_outer
    s_out = tables.sgrid.outer_nodes
    R_out = r_row_table(
        modal, s_out, tables.F_table[:n1], tables.G_table[:n1], tables.f_vec[:n1], tables.g_vec[:n1], gamma, j
    )
    I_out = R_out.T @ cos_out_w  # (2n, n_t)
    lazy = _LazyRowTable(
        modal,
        tables.sgrid.inner_nodes,
        tables.F_table[n1:],
        tables.G_table[n1:],
        tables.f_vec[n1:],
        tables.g_vec[n1:],
        gamma,
        j,
    )
    I_in, depth = _inner_integrals(lazy, cosw2_in, spec)
    I = 2.0 * (I_out + I_in)
    weight = problem.p if j <= modal.n else 1.0
    return weight * float(np.sum((I * I) @ eta)), lazy.evaluated, depth


def _check_gamma(modal: ModalSystem, spec: QuadratureSpec, viscosity: float) -> float:
    gamma = viscosity * modal.gamma_per_viscosity
    if gamma > spec.gamma_max * (1.0 + 1e-12):
        raise GammaRangeError(
            f"gamma={gamma:.6g} exceeds gamma_max={spec.gamma_max:.6g}; rebuild tables with a larger gamma_max"
        )
    return gamma


def norm_fast(
    modal: ModalSystem,
    problem: NormProblem,
    spec: QuadratureSpec,
    tables: OfflineTables,
    viscosity: float,
    threads: int = 1,
) -> NormValue:
    """Quadrature estimate of trace(int_0^T exp(At) Z exp(A't) dt)."""
    t0 = time.perf_counter()
    gamma = _check_gamma(modal, spec, viscosity)
    n1 = tables.n_outer
    cos_out_w = _outer_cos_weights(tables)
    cosw2_in = 2.0 * tables.cos_table[n1:]
    eta = tables.tgrid.weights
    labels = _row_labels(modal.n, problem.r)

    def work(j):
        return _row_contribution(modal, problem, spec, tables, gamma, j, cos_out_w, cosw2_in, eta)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, labels))
    else:
        results = [work(j) for j in labels]

    total = sum(contrib for contrib, _, _ in results) / _FOUR_PI_SQ
    nodes = [nv for _, nv, _ in results]
    return NormValue(
        value=total,
        inner_nodes_per_row=nodes,
        inner_nodes_max=max(nodes),
        adaptive_depth_max=max(d for _, _, d in results),
        timings={"online_s": time.perf_counter() - t0},
    )


def viscosity_sweep(
    modal: ModalSystem,
    problem: NormProblem,
    spec: QuadratureSpec,
    viscosities,
    threads: int = 1,
) -> list[NormValue]:
    """One offline pass, then norm_fast per viscosity (values unchanged)."""
    tables = offline(modal, problem, spec)
    return [norm_fast(modal, problem, spec, tables, v, threads=threads) for v in viscosities]


def horizon_sweep(
    modal: ModalSystem,
    problem: NormProblem,
    spec: QuadratureSpec,
    viscosity: float,
    horizons,
    threads: int = 1,
) -> list[NormValue]:
    """Norm values for several horizons T at one viscosity.

    The R_jk tables (the expensive, t-independent part) are evaluated once per
    row and shared across horizons; only the time grid, the cos table and the
    quadrature sums are redone per T.  Values match fresh norm_fast calls.
    """
    gamma = _check_gamma(modal, spec, viscosity)
    base = offline(modal, problem, spec)
    n1 = base.n_outer
    s_all = base.sgrid.nodes
    per_t = []
    for T in horizons:
        tg = gauss_legendre(T, spec.n_t)
        cos_tab = np.cos(np.outer(s_all, tg.nodes))
        tables_T = OfflineTables(
            sgrid=base.sgrid,
            tgrid=tg,
            F_table=base.F_table,
            G_table=base.G_table,
            f_vec=base.f_vec,
            g_vec=base.g_vec,
            cos_table=cos_tab,
            s_max=base.s_max,
        )
        per_t.append((tables_T, _outer_cos_weights(tables_T), 2.0 * cos_tab[n1:], tg.weights))

    totals = np.zeros(len(horizons))
    nodes_rows = [[] for _ in horizons]
    depths = np.zeros(len(horizons), dtype=int)
    for j in _row_labels(modal.n, problem.r):
        lazy = _LazyRowTable(
            modal, base.sgrid.inner_nodes, base.F_table[n1:], base.G_table[n1:], base.f_vec[n1:], base.g_vec[n1:], gamma, j
        )
        s_out = base.sgrid.outer_nodes
        R_out = r_row_table(
            modal, s_out, base.F_table[:n1], base.G_table[:n1], base.f_vec[:n1], base.g_vec[:n1], gamma, j
        )
        weight = problem.p if j <= modal.n else 1.0
        for ti, (tables_T, cos_out_w, cosw2_in, eta) in enumerate(per_t):
            I_out = R_out.T @ cos_out_w
            I_in, depth = _inner_integrals(lazy, cosw2_in, spec)
            I = 2.0 * (I_out + I_in)
            totals[ti] += weight * float(np.sum((I * I) @ eta))
            nodes_rows[ti].append(lazy.evaluated)
            depths[ti] = max(depths[ti], depth)
    return [
        NormValue(
            value=float(totals[ti]) / _FOUR_PI_SQ,
            inner_nodes_per_row=nodes_rows[ti],
            inner_nodes_max=max(nodes_rows[ti]),
            adaptive_depth_max=int(depths[ti]),
        )
        for ti in range(len(horizons))
    ]
