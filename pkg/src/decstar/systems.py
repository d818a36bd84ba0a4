"""Mixed saddle-point systems and wave eigensystems on primal/dual cochains.

Each physical problem (magnetostatics, Darcy flow) admits four equivalent
mixed formulations, two discretizing the flux-like variable on the primal
mesh and two on the dual mesh.  All systems are assembled as symmetric 2x2
block matrices and solved by dense factorization at the scales this library
targets; pressure-like gauge freedoms are handled by pinning one degree of
freedom or by a mean-zero augmentation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .mesh import SimplicialComplex


class SystemError(ValueError):
    pass


class IncompatibleLoadError(SystemError):
    """Right-hand side not in the range of the relevant derivative."""


@dataclass
class MixedSystem:
    """A 2x2 block saddle-point system with its recovery rules.

    The recovery callable maps the solved block unknowns (u, w) to the
    physical pair of cochains the formulation approximates.
    """

    name: str
    blocks: tuple  # ((A, B), (C, None)) sparse blocks; C = B.T structurally
    unknowns: tuple  # descriptors of the two block variables
    rhs: tuple  # (f, g) arrays
    recover: callable  # (u, w) -> dict of named physical cochains
    gauge: int | None = None  # index into the second block needing pinning
    provenance: dict = field(default_factory=dict)

    def matrix(self) -> np.ndarray:
        (A, B), (C, _) = self.blocks
        A = A.toarray() if sp.issparse(A) else np.asarray(A)
        B = B.toarray() if sp.issparse(B) else np.asarray(B)
        C = C.toarray() if sp.issparse(C) else np.asarray(C)
        n0, n1 = A.shape[0], B.shape[1]
        M = np.zeros((n0 + n1, n0 + n1))
        M[:n0, :n0] = A
        M[:n0, n0:] = B
        M[n0:, :n0] = C
        return M

    def rhs_vector(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.rhs[0], dtype=float),
                               np.asarray(self.rhs[1], dtype=float)])


@dataclass
class SolveReport:
    system: str
    u: np.ndarray
    w: np.ndarray
    recovered: dict
    residual: float
    gauge_applied: str | None
    seconds: float


@dataclass
class WaveSystem:
    formulation: str  # "primal" | "dual"
    stiffness: np.ndarray
    mass: np.ndarray

    def eigenpairs(self, count: int | None = None):
        """Generalized eigenpairs (omega^2, mode), ascending."""
        mass_eigs = np.linalg.eigvalsh(self.mass)
        if mass_eigs.min() <= 0:
            raise SystemError("wave mass matrix is not positive definite")
        vals, vecs = scipy.linalg.eigh(self.stiffness, self.mass)
        if count is not None:
            vals, vecs = vals[:count], vecs[:, :count]
        return vals, vecs


# ---------------------------------------------------------------------------
# helpers


def _as_dense(M):
    return M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)


def particular_solution(D, rhs, tol: float = 1e-10) -> np.ndarray:
    """Minimum-norm solution of D x = rhs; rejects incompatible loads."""
    D = _as_dense(D)
    rhs = np.asarray(rhs, dtype=float)
    x, *_ = np.linalg.lstsq(D, rhs, rcond=None)
    residual = np.linalg.norm(D @ x - rhs)
    scale = max(np.linalg.norm(rhs), 1.0)
    if residual > tol * scale:
        raise IncompatibleLoadError(
            f"load is not in the range of the derivative "
            f"(least-squares residual {residual:.3e})"
        )
    return x


def _check_load(name, load, expected):
    load = np.asarray(load, dtype=float)
    if load.shape != (expected,):
        raise SystemError(
            f"{name}: load has length {len(load)}, expected {expected}"
        )
    return load


# ---------------------------------------------------------------------------
# generic mixed systems


def assemble_generic(complex: SimplicialComplex, k: int, orientation: str,
                     M, M_inv, f, g) -> MixedSystem:
    """The two generic mixed layouts for a k-form unknown with an
    (n-k-1)-form intermediary.

    orientation="primal-first": u is a primal k-cochain and the blocks are
    ((-M_k, D_k^T), (D_k, 0)).  orientation="dual-first": u is a dual
    k-cochain, indexed by primal (n-k)-simplices, and the blocks are
    ((-M_{n-k}^{-1}, D_{n-k-1}), (D_{n-k-1}^T, 0)); M and M_inv are then the
    Hodge pair for degree n-k.
    """
    n = complex.dim
    if orientation == "primal-first":
        D = complex.incidence_matrix(k)
        A = -_as_dense(M)
        B = D.T.toarray()
        sizes = (len(complex.simplices[k]), D.shape[0])
    elif orientation == "dual-first":
        m = n - k
        D = complex.incidence_matrix(m - 1)
        A = -_as_dense(M_inv)
        B = D.toarray()
        sizes = (len(complex.simplices[m]), D.shape[1])
    else:
        raise SystemError(f"unknown orientation {orientation!r}")
    f = _check_load("generic f", f, sizes[0])
    g = _check_load("generic g", g, sizes[1])
    if A.shape[0] != B.shape[0]:
        raise SystemError(
            f"block dimension mismatch: Hodge block {A.shape} vs derivative "
            f"block {B.shape}"
        )
    return MixedSystem(
        name=f"generic-{orientation}-k{k}",
        blocks=((A, B), (B.T, None)),
        unknowns=("u", "w"),
        rhs=(f, g),
        recover=lambda u, w: {"u": u, "w": w},
        gauge=None,
        provenance={"n": n, "k": k},
    )


# ---------------------------------------------------------------------------
# magnetostatics


def assemble_magnetostatics(complex: SimplicialComplex, system: int, j,
                            M, M_inv) -> MixedSystem:
    """The four magnetostatics formulations, dimension-generic.

    Systems 1-2 discretize the flux b as a primal (n-1)-cochain and the
    field h as a dual 1-cochain (indexed by primal (n-1)-simplices); systems
    3-4 swap the roles.  M / M_inv are the Hodge matrices pairing those
    spaces, which must be exact inverses of each other for the formulation
    equivalences to hold.

    Loads: systems 1-2 take the current as a dual cochain indexed by primal
    (n-2)-simplices; systems 3-4 take it as a primal 2-cochain (the field h
    is a primal 1-cochain in every dimension).
    """
    n = complex.dim
    M = _as_dense(M)
    M_inv = _as_dense(M_inv)
    Dtop = complex.incidence_matrix(n - 1)  # (n-1)-simplices -> n-simplices
    Dlow = complex.incidence_matrix(n - 2)
    n_flux = len(complex.simplices[n - 1])

    if system == 1:
        j = _check_load("magnetostatics system 1 current", j,
                        len(complex.simplices[n - 2]))
        h0 = particular_solution(Dlow.T.toarray(), j)
        B = Dtop.T.toarray()

        def recover(u, w):
            h = h0 + B @ w
            return {"b": u, "h": h}

        return MixedSystem("magnetostatics-1", ((-M, B), (B.T, None)),
                           ("b_primal", "p_dual"), (-h0, np.zeros(Dtop.shape[0])),
                           recover, gauge=None, provenance={"h0": h0})

    if system == 2:
        j = _check_load("magnetostatics system 2 current", j,
                        len(complex.simplices[n - 2]))
        B = Dlow.toarray()

        def recover(u, w):
            return {"b": B @ w, "h": u}

        return MixedSystem("magnetostatics-2", ((-M_inv, B), (B.T, None)),
                           ("h_dual", "a_primal"), (np.zeros(n_flux), j),
                           recover, gauge=0)

    D1 = complex.incidence_matrix(1)
    D0 = complex.incidence_matrix(0)
    n_edges = len(complex.simplices[1])

    if system == 3:
        j = _check_load("magnetostatics system 3 current", j,
                        len(complex.simplices[2]))
        h0 = particular_solution(D1.toarray(), j)
        B = D0.toarray()

        def recover(u, w):
            return {"b": u, "h": M_inv @ u}

        return MixedSystem("magnetostatics-3", ((-M_inv, B), (B.T, None)),
                           ("b_dual", "p_primal"),
                           (-h0, np.zeros(D0.shape[1])),
                           recover, gauge=0, provenance={"h0": h0})

    if system == 4:
        j = _check_load("magnetostatics system 4 current", j,
                        len(complex.simplices[2]))
        B = D1.T.toarray()

        def recover(u, w):
            return {"b": B @ w, "h": u}

        return MixedSystem("magnetostatics-4", ((-M, B), (B.T, None)),
                           ("h_primal", "a_dual"), (np.zeros(n_edges), j),
                           recover, gauge=None)

    raise SystemError(f"magnetostatics system id must be 1-4, got {system}")


# ---------------------------------------------------------------------------
# Darcy flow


def assemble_darcy(complex: SimplicialComplex, system: int, phi,
                   M, M_inv) -> MixedSystem:
    """The four Darcy-flow formulations, dimension-generic.

    Systems 1-2 discretize the flux f as a primal (n-1)-cochain with the
    source phi a primal n-cochain; systems 3-4 use a dual flux with the
    source a dual n-cochain (indexed by primal vertices).
    """
    n = complex.dim
    M = _as_dense(M)
    M_inv = _as_dense(M_inv)
    Dtop = complex.incidence_matrix(n - 1)
    Dlow = complex.incidence_matrix(n - 2)
    n_flux = len(complex.simplices[n - 1])

    if system == 1:
        phi = _check_load("darcy system 1 source", phi,
                          len(complex.simplices[n]))
        B = Dtop.T.toarray()

        def recover(u, w):
            return {"f": u, "p": w}

        return MixedSystem("darcy-1", ((M, B), (B.T, None)),
                           ("f_primal", "p_dual"),
                           (np.zeros(n_flux), phi), recover, gauge=None)

    if system == 2:
        phi = _check_load("darcy system 2 source", phi,
                          len(complex.simplices[n]))
        f0 = particular_solution(Dtop.toarray(), phi)
        B = Dlow.toarray()

        def recover(u, w):
            p = particular_solution(Dtop.T.toarray(), -u)
            return {"f": M_inv @ u, "p": p}

        return MixedSystem("darcy-2", ((-M_inv, B), (B.T, None)),
                           ("q_dual", "g_primal"),
                           (-f0, np.zeros(B.shape[1])),
                           recover, gauge=0, provenance={"f0": f0})

    D0 = complex.incidence_matrix(0)
    D1 = complex.incidence_matrix(1)
    n_edges = len(complex.simplices[1])

    if system == 3:
        phi = _check_load("darcy system 3 source", phi,
                          len(complex.vertices))
        B = D0.toarray()

        def recover(u, w):
            return {"f": u, "p": w}

        return MixedSystem("darcy-3", ((M_inv, B), (B.T, None)),
                           ("f_dual", "p_primal"),
                           (np.zeros(n_edges), phi), recover, gauge=0)

    if system == 4:
        phi = _check_load("darcy system 4 source", phi,
                          len(complex.vertices))
        f0 = particular_solution(D0.T.toarray(), phi)
        B = D1.T.toarray()

        def recover(u, w):
            p = particular_solution(D0.toarray(), -u)
            return {"f": M @ u, "p": p}

        return MixedSystem("darcy-4", ((M, B), (B.T, None)),
                           ("q_primal", "g_dual"),
                           (f0, np.zeros(B.shape[1])),
                           recover, gauge=None, provenance={"f0": f0})

    raise SystemError(f"darcy system id must be 1-4, got {system}")


# ---------------------------------------------------------------------------
# solve and compare


def solve(system: MixedSystem, gauge: str = "pin") -> SolveReport:
    """Dense solve of a mixed system with gauge handling.

    gauge="pin" zeroes one gauge degree of freedom; gauge="augment" enforces
    a zero mean on the gauge variable via a bordered system.  Rank
    deficiency beyond the declared gauge is an error.
    """
    t0 = time.perf_counter()
    K = system.matrix()
    b = system.rhs_vector()
    n0 = len(system.rhs[0])
    applied = None
    if system.gauge is not None:
        gi = n0 + system.gauge
        if gauge == "pin":
            K = K.copy()
            K[gi, :] = 0.0
            K[:, gi] = 0.0
            K[gi, gi] = 1.0
            b = b.copy()
            b[gi] = 0.0
            applied = f"pin dof {system.gauge}"
        elif gauge == "augment":
            m = K.shape[0]
            n1 = m - n0
            Ka = np.zeros((m + 1, m + 1))
            Ka[:m, :m] = K
            Ka[m, n0:m] = 1.0
            Ka[n0:m, m] = 1.0
            K = Ka
            b = np.concatenate([b, [0.0]])
            applied = "mean-zero augmentation"
        else:
            raise SystemError(f"unknown gauge strategy {gauge!r}")
    try:
        x = scipy.linalg.solve(K, b, assume_a="sym")
    except scipy.linalg.LinAlgError as exc:
        raise SystemError(f"saddle system singular: {exc}") from exc
    residual = np.linalg.norm(K @ x - b) / max(np.linalg.norm(b), 1.0)
    if not np.isfinite(x).all() or residual > 1e-6:
        null_dim = K.shape[0] - np.linalg.matrix_rank(K)
        raise SystemError(
            f"saddle system rank-deficient beyond the declared gauge "
            f"(residual {residual:.3e}, null-space dimension {null_dim})"
        )
    total = n0 + len(system.rhs[1])
    u, w = x[:n0], x[n0:total]
    recovered = system.recover(u, w)
    return SolveReport(system.name, u, w, recovered, float(residual),
                       applied, time.perf_counter() - t0)


def align_gauge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Shift b by a constant so its mean matches a's (pressure alignment)."""
    return b + (a.mean() - b.mean())


def cross_validate(reports: list, align: tuple = ("p",)) -> dict:
    """Pairwise max-norm differences of recovered cochains across reports.

    Fields named in `align` are compared after constant-shift alignment.
    """
    out = {}
    for i in range(len(reports)):
        for j in range(i + 1, len(reports)):
            ra, rb = reports[i], reports[j]
            diffs = {}
            for key in ra.recovered:
                if key not in rb.recovered:
                    continue
                va = np.asarray(ra.recovered[key])
                vb = np.asarray(rb.recovered[key])
                if key in align:
                    vb = align_gauge(va, vb)
                diffs[key] = float(np.abs(va - vb).max())
            out[(ra.system, rb.system)] = diffs
    return out


# ---------------------------------------------------------------------------
# wave eigensystems


def assemble_wave(complex: SimplicialComplex, formulation: str,
                  M1, M2, M1_inv=None, M2_inv=None) -> WaveSystem:
    """Wave eigensystems for the electric (primal) or magnetic (dual) field.

    primal: (D_1^T M_2 D_1) e = omega^2 M_1 e.
    dual:   (D_1 M_1^{-1} D_1^T) h = omega^2 M_2^{-1} h.
    """
    D1 = complex.incidence_matrix(1).toarray()
    if formulation == "primal":
        A = D1.T @ _as_dense(M2) @ D1
        B = _as_dense(M1)
    elif formulation == "dual":
        if M1_inv is None or M2_inv is None:
            raise SystemError("dual wave system needs inverse Hodge matrices")
        A = D1 @ _as_dense(M1_inv) @ D1.T
        B = _as_dense(M2_inv)
    else:
        raise SystemError(f"unknown wave formulation {formulation!r}")
    A = 0.5 * (A + A.T)
    B = 0.5 * (B + B.T)
    if np.linalg.eigvalsh(B).min() <= 0:
        raise SystemError("wave mass matrix is not positive definite")
    return WaveSystem(formulation, A, B)
