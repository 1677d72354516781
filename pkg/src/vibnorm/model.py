"""System assembly and modal coordinates.

Builds mass/stiffness/damping descriptions of n-mass oscillators and performs
the simultaneous diagonalization Phi' M Phi = I, Phi' K Phi = diag(omega^2).
External damping is rank-1: in modal coordinates D = gamma * U U' with
gamma = viscosity * ||Phi' e||^2 and U the unit damping direction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla


class ModelError(ValueError):
    """Invalid system configuration or geometry."""


class NotPositiveDefiniteError(ModelError):
    """M or K failed a Cholesky factorization."""


@dataclass(frozen=True)
class SecondOrderSystem:
    """Physical-space description M x'' + C x' + K x = ...

    Internal damping is alpha times the critical damping; the external damper
    geometry is the vector ``damper_e`` (rank-1 damper, strength set later by
    the viscosity).
    """

    M: np.ndarray
    K: np.ndarray
    alpha: float
    damper_e: np.ndarray

    @property
    def n(self) -> int:
        return self.M.shape[0]

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        K = np.asarray(self.K, dtype=float)
        e = np.asarray(self.damper_e, dtype=float)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "damper_e", e)
        n = M.shape[0]
        if M.shape != (n, n) or K.shape != (n, n) or e.shape != (n,):
            raise ModelError("M, K must be n x n and damper_e length n")
        if not np.allclose(M, M.T) or not np.allclose(K, K.T):
            raise ModelError("M and K must be symmetric")
        if self.alpha <= 0:
            raise ModelError("alpha must be positive")
        if not np.any(e):
            raise ModelError("damper geometry vector must be nonzero")


@dataclass(frozen=True)
class ModalSystem:
    """Modal-coordinate data of a second-order system.

    omega is sorted ascending, U is the unit damping direction and
    gamma_per_viscosity converts a physical viscosity v into the modal
    rank-1 damping strength gamma = v * gamma_per_viscosity.
    """

    omega: np.ndarray
    Phi: np.ndarray
    nu: float
    U: np.ndarray
    gamma_per_viscosity: float

    @property
    def n(self) -> int:
        return self.omega.shape[0]

    @property
    def omega_max(self) -> float:
        return float(self.omega[-1])


def _cholesky_spd(A: np.ndarray, name: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"{name} is not positive definite") from exc


def modal_transform(sys: SecondOrderSystem) -> ModalSystem:
    """Simultaneously diagonalize (M, K) and factor the rank-1 damper.

    Uses the Cholesky reduction M = L L', the symmetric eigendecomposition of
    L^-1 K L^-T and Phi = L^-T Q.  Eigenfrequencies are returned ascending and
    each eigenvector column is sign-fixed so that its first nonzero entry is
    positive, making U reproducible.
    """
    L = _cholesky_spd(sys.M, "M")
    _cholesky_spd(sys.K, "K")
    Kt = sla.solve_triangular(L, sys.K, lower=True)
    Kt = sla.solve_triangular(L, Kt.T, lower=True).T
    Kt = 0.5 * (Kt + Kt.T)
    om2, Q = np.linalg.eigh(Kt)
    if om2[0] <= 0:
        raise NotPositiveDefiniteError("K is not positive definite")
    Phi = sla.solve_triangular(L.T, Q, lower=False)
    # deterministic column signs: first entry of significant magnitude positive
    for j in range(Phi.shape[1]):
        col = Phi[:, j]
        nz = np.nonzero(np.abs(col) > 1e-14 * np.abs(col).max())[0]
        if nz.size and col[nz[0]] < 0:
            Phi[:, j] = -col
    omega = np.sqrt(om2)
    Pe = Phi.T @ sys.damper_e
    gpv = float(Pe @ Pe)
    if gpv <= 0:
        raise ModelError("damper direction vanishes in modal coordinates")
    U = Pe / np.sqrt(gpv)
    return ModalSystem(omega=omega, Phi=Phi, nu=2.0 * sys.alpha, U=U, gamma_per_viscosity=gpv)


def example1_masses(n: int) -> np.ndarray:
    j = np.arange(1, n + 1, dtype=float)
    split = n // 4
    return np.where(j <= split, (n - 2 * j) / 10.0, (split + j) / 10.0)


def _tridiag_stiffness(k: np.ndarray) -> np.ndarray:
    """Chain stiffness matrix from spring constants k_1..k_{n+1}."""
    n = k.size - 1
    K = np.diag(k[:-1] + k[1:])
    off = -k[1:-1]
    K += np.diag(off, 1) + np.diag(off, -1)
    return K


def build_example1(n: int, damper_index: int) -> SecondOrderSystem:
    """n-mass oscillator chain with one grounded damper at mass damper_index.

    All n+1 springs have stiffness n/2; masses follow the two-branch formula
    (n-2j)/10 for j <= n/4 and (n/4+j)/10 above.  n must be even so that the
    mass formula stays positive (n divisible by 4 in the reference setups).
    """
    if n < 4 or n % 2 != 0:
        raise ModelError("example1 requires even n >= 4")
    if not (1 <= damper_index <= n):
        raise ModelError("damper_index out of range")
    M = np.diag(example1_masses(n))
    K = _tridiag_stiffness(np.full(n + 1, n / 2.0))
    e = np.zeros(n)
    e[damper_index - 1] = 1.0
    return SecondOrderSystem(M=M, K=K, alpha=0.005, damper_e=e)


def example3_masses(d: int) -> np.ndarray:
    n = 3 * d + 1
    j = np.arange(1, n + 1, dtype=float)
    m = np.empty(n)
    m[: d // 2] = 1000.0 - 2.0 * j[: d // 2]
    m[d // 2 : d] = j[d // 2 : d] - 200.0
    m[d : 2 * d] = j[d : 2 * d] + 100.0
    # the published branch "n - 2j" is negative on 2d+1..3d; use 2n - 2j,
    # which stays positive and keeps the linear decay
    m[2 * d : 3 * d] = 2.0 * n - 2.0 * j[2 * d : 3 * d]
    m[-1] = 2000.0
    return m


def build_example3(d: int, damper_i: int, k4: float) -> SecondOrderSystem:
    """(3d+1)-mass oscillator: three rows of d masses coupled to one extra mass.

    Row stiffnesses are (k1, k2, k3) = (800, 600, 700); the coupling mass is
    tied to the base through k4 (no published value, so it is a required
    parameter).  The damper sits between masses damper_i and damper_i + d.
    """
    if d < 2 or d % 2 != 0:
        raise ModelError("example3 requires even d >= 2")
    n = 3 * d + 1
    if not (1 <= damper_i <= 2 * d):
        raise ModelError("damper_i must be in 1..2d")
    ks = (800.0, 600.0, 700.0)
    K = np.zeros((n, n))
    for i, ki in enumerate(ks):
        lo = i * d
        blk = ki * (np.diag(np.full(d, 2.0)) + np.diag(np.full(d - 1, -1.0), 1) + np.diag(np.full(d - 1, -1.0), -1))
        K[lo : lo + d, lo : lo + d] = blk
        K[lo + d - 1, n - 1] = -ki
        K[n - 1, lo + d - 1] = -ki
    K[n - 1, n - 1] = sum(ks) + k4
    M = np.diag(example3_masses(d))
    e = np.zeros(n)
    e[damper_i - 1] = 1.0
    e[damper_i + d - 1] = -1.0
    return SecondOrderSystem(M=M, K=K, alpha=0.005, damper_e=e)


def system_from_json(source) -> SecondOrderSystem:
    """Build a system from a JSON description (dict, JSON string or file path).

    Supported: {"type": "example1", "n": ..., "damper_index": ...},
    {"type": "example3", "d": ..., "damper_i": ..., "k4": ...} and
    {"type": "explicit", "M": ..., "K": ... | "K_bands": {"diag": ..., "off": ...},
     "e": ..., "alpha": ...} with dense row-major matrices.
    """
    if isinstance(source, dict):
        cfg = source
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            cfg = json.loads(text)
        else:
            with open(text) as fh:
                cfg = json.load(fh)
    kind = cfg.get("type")
    if kind == "example1":
        return build_example1(int(cfg["n"]), int(cfg.get("damper_index", 1)))
    if kind == "example3":
        return build_example3(int(cfg["d"]), int(cfg.get("damper_i", 1)), float(cfg["k4"]))
    if kind == "explicit":
        M = np.asarray(cfg["M"], dtype=float)
        if "K_bands" in cfg:
            diag = np.asarray(cfg["K_bands"]["diag"], dtype=float)
            off = np.asarray(cfg["K_bands"]["off"], dtype=float)
            K = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
        else:
            K = np.asarray(cfg["K"], dtype=float)
        return SecondOrderSystem(M=M, K=K, alpha=float(cfg["alpha"]), damper_e=np.asarray(cfg["e"], dtype=float))
    raise ModelError(f"unknown system type {kind!r}")


def critical_damping(M: np.ndarray, K: np.ndarray) -> np.ndarray:
    """2 M^(1/2) sqrt(M^(-1/2) K M^(-1/2)) M^(1/2)."""
    w, V = np.linalg.eigh(M)
    if w[0] <= 0:
        raise NotPositiveDefiniteError("M is not positive definite")
    Mh = (V * np.sqrt(w)) @ V.T
    Mih = (V * (1.0 / np.sqrt(w))) @ V.T
    S = Mih @ K @ Mih
    ws, Vs = np.linalg.eigh(0.5 * (S + S.T))
    root = (Vs * np.sqrt(np.maximum(ws, 0.0))) @ Vs.T
    return 2.0 * Mh @ root @ Mh
