"""Orthonormal wavelet bases on [0, 1], sampled on a dyadic grid.

Two kinds are provided:

* ``haar`` -- the Haar system, sampled exactly.  Supports tile [0, 1]
  (intervals closed to the left only at position k = 0).
* ``boundary-smooth`` -- a boundary-corrected orthonormal filter bank of
  order p (default 4), built by iterating two-scale refinement of the
  Daubechies filter with locally orthonormalized edge blocks.  The discrete
  construction is orthonormal on the grid by design, keeps polynomials of
  degree < p in every scaling space (so all wavelets have exactly vanishing
  grid means), and its interior functions converge to the classical smooth
  compactly supported wavelets.

The basis starts at a single scaling coefficient (the scaling function is
the constant 1) and carries 2^l wavelets at each level l = 0..L_max.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Iterator

import numpy as np
import scipy.sparse as sp

from .grids import DyadicGrid, GridFunction

HAAR_GRAM_TOL = 1e-8
SMOOTH_GRAM_TOL = 1e-6


class ResolutionError(ValueError):
    """Grid too coarse for the requested number of levels."""


class BasisConstructionError(RuntimeError):
    """The filter-bank construction failed a structural invariant."""


@dataclass(frozen=True)
class WaveletIndex:
    level: int
    position: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be >= 0")
        if not 0 <= self.position <= 2 ** self.level - 1:
            raise ValueError(
                f"position {self.position} out of range at level {self.level}"
            )


def eval_haar(idx: WaveletIndex, x):
    """Haar wavelet 2^{l/2} psi(2^l x - k) at points x in [0, 1].

    psi = -1 on [0, 1/2], +1 on (1/2, 1]; the support interval is closed to
    the left only when k = 0, so the supports at a level tile [0, 1].
    """
    x = np.asarray(x, dtype=float)
    l, k = idx.level, idx.position
    y = np.ldexp(x, l) - k
    if k == 0:
        inside = (y >= 0.0) & (y <= 1.0)
    else:
        inside = (y > 0.0) & (y <= 1.0)
    sign = np.where(y <= 0.5, -1.0, 1.0)
    out = np.where(inside, sign * 2.0 ** (l / 2.0), 0.0)
    return out if out.ndim else float(out)


def daubechies_filter(p: int) -> np.ndarray:
    """Minimal-phase orthonormal low-pass filter with p vanishing moments.

    Classical spectral factorization: roots of P(y) = sum_k C(p-1+k, k) y^k
    are mapped to the z-plane and the roots inside the unit circle are kept.
    Length 2p, sum sqrt(2).
    """
    if p < 1:
        raise ValueError("filter order must be >= 1")
    if p == 1:
        return np.array([1.0, 1.0]) / np.sqrt(2.0)
    coeffs = [comb(p - 1 + k, k) for k in range(p)]
    yroots = np.roots(list(reversed(coeffs)))
    zroots = []
    for y in yroots:
        b = 2.0 - 4.0 * y
        disc = np.sqrt(b * b - 4.0 + 0j)
        for z in ((b + disc) / 2.0, (b - disc) / 2.0):
            if abs(z) < 1.0:
                zroots.append(z)
    poly = np.array([1.0 + 0j])
    for _ in range(p):
        poly = np.convolve(poly, [1.0, 1.0])
    for z in zroots:
        poly = np.convolve(poly, [1.0, -z])
    h = np.real(poly)
    h *= np.sqrt(2.0) / h.sum()
    return h


def _mirror_filter(h: np.ndarray) -> np.ndarray:
    F = len(h)
    return np.array([(-1) ** i * h[F - 1 - i] for i in range(F)])


def _qr_columns(A: np.ndarray) -> np.ndarray:
    """Householder QR with sign fixing; columns are normalized first."""
    nrm = np.linalg.norm(A, axis=0)
    if nrm.min() <= 0:
        raise BasisConstructionError("zero column in edge block")
    Q, R = np.linalg.qr(A / nrm)
    d = np.abs(np.diag(R))
    if d.min() < 1e-7:
        raise BasisConstructionError(f"edge block nearly rank deficient ({d.min():.2e})")
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    return Q * s


def _pivoted_complement(C: np.ndarray, A: np.ndarray, count: int) -> np.ndarray:
    """Orthonormal basis (count columns) of span(C) projected out of span(A).

    A must have orthonormal columns.  Deterministic greedy pivoting on the
    residual norms; raises if the residual rank falls short.
    """
    C = C.astype(float).copy()
    if A.size:
        C -= A @ (A.T @ C)
        C -= A @ (A.T @ C)
    picked = np.empty((C.shape[0], count))
    for i in range(count):
        norms = np.linalg.norm(C, axis=0)
        jbest = int(np.argmax(norms))
        if norms[jbest] < 1e-7:
            raise BasisConstructionError(
                f"completion rank deficiency ({norms[jbest]:.2e})"
            )
        v = C[:, jbest] / norms[jbest]
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        picked[:, i] = v
        C = np.delete(C, jbest, axis=1)
        C -= np.outer(v, v @ C)
    return picked


def _edge_candidates(h: np.ndarray, g: np.ndarray, n2: int, width: int, side: str):
    """Clipped filter patterns plus unit vectors near one boundary.

    Returns (rows, cols) lists for sparse-style assembly on a local window.
    """
    F = len(h)
    cands = []
    for s in range(-F + 2, F):
        for f in (g, h):
            rr = np.arange(s, s + F)
            m = (rr >= 0) & (rr < n2)
            if m.any():
                cands.append((rr[m], f[m]))
    for i in range(width):
        cands.append((np.array([i]), np.array([1.0])))
    if side == "right":
        cands = [((n2 - 1) - rows, vals) for rows, vals in cands]
    return cands


def _build_level(h: np.ndarray, p: int, j: int, UL: np.ndarray, UR: np.ndarray):
    """One refinement level of the boundary-corrected filter bank.

    Returns sparse two-scale matrices M (scaling) and Q (wavelet), both
    2n x n with jointly orthonormal columns, plus the monomial coefficient
    matrices carried to level j.  UL/UR are the level-(j+1) coefficients of
    the polynomial families x^r and (1-x)^r, r < p, used to pin the edge
    scaling spaces (left and right parametrizations keep the residual
    blocks well conditioned at their own edge).
    """
    n = 2 ** j
    n2 = 2 * n
    F = 2 * p
    g = _mirror_filter(h)
    o = p + 1  # row offset of the first interior column
    nint = n - 2 * p

    if n >= 4 * p:
        W = 4 * p
        # left edge scaling block: local residuals of x^r against interior columns
        RL = UL[:W, :].copy()
        for i in range(nint):
            lo = o + 2 * i
            if lo >= W:
                break
            coef = h @ UL[lo:lo + F, :]
            hi = min(lo + F, W)
            RL[lo:hi, :] -= np.outer(h[: hi - lo], coef)
        RR = UR[n2 - W:, :].copy()
        for i in range(nint - 1, -1, -1):
            lo = o + 2 * i
            if lo + F <= n2 - W:
                break
            coef = h @ UR[lo:lo + F, :]
            start = max(lo, n2 - W)
            RR[start - (n2 - W):start - (n2 - W) + (lo + F - start), :] -= np.outer(
                h[start - lo:], coef
            )
        inner_l = np.abs(RL[-2:, :]).max()
        inner_r = np.abs(RR[:2, :]).max()
        scale = max(np.linalg.norm(RL, axis=0).max(), np.linalg.norm(RR, axis=0).max())
        if max(inner_l, inner_r) > 1e-9 * max(scale, 1e-300):
            raise BasisConstructionError("edge residuals leak out of their window")
        left_blk = _qr_columns(RL)    # W x p
        right_blk = _qr_columns(RR)   # W x p

        def interior_cols_dense(rows, filt):
            """Interior columns restricted to a contiguous row range."""
            out = []
            lo0, hi0 = rows.start, rows.stop
            for i in range(nint):
                lo = o + 2 * i
                if lo + F <= lo0 or lo >= hi0:
                    continue
                col = np.zeros(hi0 - lo0)
                a, b = max(lo, lo0), min(lo + F, hi0)
                col[a - lo0:b - lo0] = filt[a - lo:b - lo]
                out.append(col)
            return out

        if n >= 8 * p:
            # disjoint local windows at each boundary
            win = 10 * p
            cands = _edge_candidates(h, g, n2, W, "left")
            CL = np.zeros((win, len(cands)))
            for idx, (rws, vals) in enumerate(cands):
                m = rws < win
                CL[rws[m], idx] = vals[m]
            AL = np.column_stack(
                [np.pad(left_blk, ((0, win - W), (0, 0)))]
                + interior_cols_dense(range(0, win), h)
                + interior_cols_dense(range(0, win), g)
            )
            wleft_loc = _pivoted_complement(CL, AL, p)
            wleft = np.zeros((n2, p))
            wleft[:win] = wleft_loc

            cands = _edge_candidates(h, g, n2, W, "right")
            CR = np.zeros((win, len(cands)))
            for idx, (rws, vals) in enumerate(cands):
                rloc = rws - (n2 - win)
                m = rloc >= 0
                CR[rloc[m], idx] = vals[m]
            AR = np.column_stack(
                [np.pad(right_blk, ((win - W, 0), (0, 0)))]
                + [c for c in interior_cols_dense(range(n2 - win, n2), h)]
                + [c for c in interior_cols_dense(range(n2 - win, n2), g)]
            )
            wright_loc = _pivoted_complement(CR, AR, p)
            wright = np.zeros((n2, p))
            wright[n2 - win:] = wright_loc
        else:
            # n == 4p (or close): windows would overlap; complete densely
            cands = _edge_candidates(h, g, n2, W, "left") + _edge_candidates(
                h, g, n2, W, "right"
            )
            C = np.zeros((n2, len(cands)))
            for idx, (rws, vals) in enumerate(cands):
                C[rws, idx] = vals
            Mdense = np.zeros((n2, n))
            Mdense[:W, :p] = left_blk
            for i in range(nint):
                lo = o + 2 * i
                Mdense[lo:lo + F, p + i] = h
            Mdense[n2 - W:, p + nint:] = right_blk
            Wint = np.zeros((n2, nint))
            for i in range(nint):
                lo = o + 2 * i
                Wint[lo:lo + F, i] = g
            both = _pivoted_complement(C, np.concatenate([Mdense, Wint], axis=1), 2 * p)
            # order the completed vectors by support midpoint for determinism
            centers = [
                float(np.average(np.arange(n2), weights=both[:, i] ** 2))
                for i in range(2 * p)
            ]
            order = np.argsort(centers, kind="stable")
            wleft = both[:, order[:p]]
            wright = both[:, order[p:]]

        # assemble sparse M and Q
        rows_m, cols_m, vals_m = [], [], []
        for r in range(p):
            rows_m.extend(range(W))
            cols_m.extend([r] * W)
            vals_m.extend(left_blk[:, r])
        for i in range(nint):
            lo = o + 2 * i
            rows_m.extend(range(lo, lo + F))
            cols_m.extend([p + i] * F)
            vals_m.extend(h)
        for r in range(p):
            rows_m.extend(range(n2 - W, n2))
            cols_m.extend([p + nint + r] * W)
            vals_m.extend(right_blk[:, r])
        M = sp.csc_matrix((vals_m, (rows_m, cols_m)), shape=(n2, n))

        rows_q, cols_q, vals_q = [], [], []
        for r in range(p):
            nz = np.nonzero(wleft[:, r])[0]
            rows_q.extend(nz)
            cols_q.extend([r] * len(nz))
            vals_q.extend(wleft[nz, r])
        for i in range(nint):
            lo = o + 2 * i
            rows_q.extend(range(lo, lo + F))
            cols_q.extend([p + i] * F)
            vals_q.extend(g)
        for r in range(p):
            nz = np.nonzero(wright[:, r])[0]
            rows_q.extend(nz)
            cols_q.extend([p + nint + r] * len(nz))
            vals_q.extend(wright[nz, r])
        Q = sp.csc_matrix((vals_q, (rows_q, cols_q)), shape=(n2, n))
    else:
        # coarse level: polynomial columns first; complete from clipped filter
        # patterns (for shape) with unit vectors as a rank safety net
        nm = min(p, n)
        first = _qr_columns(UL[:, :nm])

        def clipped(filt):
            cols = []
            for s in range(-F + 2, n2):
                rr = np.arange(s, s + F)
                m = (rr >= 0) & (rr < n2)
                if m.any():
                    v = np.zeros(n2)
                    v[rr[m]] = filt[m]
                    cols.append(v)
            return cols

        eye = np.eye(n2)
        scands = np.column_stack(clipped(h) + [eye[:, i] for i in range(n2)])
        rest = (
            _pivoted_complement(scands, first, n - nm) if n > nm else np.empty((n2, 0))
        )
        Md = np.concatenate([first, rest], axis=1)
        wcands = np.column_stack(clipped(g) + clipped(h) + [eye[:, i] for i in range(n2)])
        Qd = _pivoted_complement(wcands, Md, n)
        M = sp.csc_matrix(Md)
        Q = sp.csc_matrix(Qd)

    UL2 = M.T @ UL
    UR2 = M.T @ UR
    res = max(
        np.linalg.norm(UL - M @ UL2, axis=0)[: min(p, n)].max(),
        np.linalg.norm(UR - M @ UR2, axis=0)[: min(p, n)].max(),
    )
    if 2 ** j >= p and res > 1e-8:
        raise BasisConstructionError(
            f"polynomial reproduction lost at level {j} ({res:.2e})"
        )
    return M, Q, UL2, UR2


def _boundary_smooth_columns(p: int, L_max: int, J: int) -> np.ndarray:
    """Grid samples of the boundary-corrected basis, one column per function.

    Column order: scaling function, then wavelets level by level.
    """
    h = daubechies_filter(p)
    N = 2 ** J
    x = (np.arange(N) + 0.5) / N
    UL = np.column_stack([x ** r for r in range(p)]) / np.sqrt(N)
    UR = np.column_stack([(1.0 - x) ** r for r in range(p)]) / np.sqrt(N)
    Ms, Qs = {}, {}
    for j in range(J - 1, -1, -1):
        M, Q, UL, UR = _build_level(h, p, j, UL, UR)
        Ms[j], Qs[j] = M, Q
    cols = []
    S = Ms[0]
    for j in range(1, J):
        S = Ms[j] @ S
    cols.append(np.asarray(S.todense()).ravel())
    for l in range(L_max + 1):
        C = Qs[l].toarray()
        for j in range(l + 1, J):
            C = Ms[j] @ C
        cols.append(np.asarray(C))
    B = np.column_stack([cols[0]] + [cols[1 + l] for l in range(L_max + 1)])
    return B * np.sqrt(N)


def _haar_columns(L_max: int, J: int) -> np.ndarray:
    N = 2 ** J
    mids = (np.arange(N) + 0.5) / N
    cols = [np.ones(N)]
    for l in range(L_max + 1):
        block = np.zeros((N, 2 ** l))
        for k in range(2 ** l):
            block[:, k] = eval_haar(WaveletIndex(l, k), mids)
        cols.append(block)
    return np.column_stack(cols)


@dataclass(frozen=True)
class CoefficientTree:
    """Scaling coefficient plus wavelet coefficients for levels 0..L_max."""

    scaling: float
    levels: tuple = field(default_factory=tuple)  # tuple of arrays, level l has 2^l

    def __post_init__(self):
        lv = tuple(np.asarray(a, dtype=float) for a in self.levels)
        for l, a in enumerate(lv):
            if a.shape != (2 ** l,):
                raise ValueError(f"level {l} must hold {2 ** l} coefficients")
        object.__setattr__(self, "levels", lv)

    @property
    def max_level(self) -> int:
        return len(self.levels) - 1

    def flatten(self) -> np.ndarray:
        return np.concatenate([[self.scaling]] + [a for a in self.levels])

    @staticmethod
    def from_flat(flat: np.ndarray, L_max: int) -> "CoefficientTree":
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (2 ** (L_max + 1),):
            raise ValueError("flat length must be 2^(L_max+1)")
        levels = []
        pos = 1
        for l in range(L_max + 1):
            levels.append(flat[pos:pos + 2 ** l])
            pos += 2 ** l
        return CoefficientTree(float(flat[0]), tuple(levels))

    def coefficient(self, idx: WaveletIndex) -> float:
        return float(self.levels[idx.level][idx.position])

    def indices(self) -> Iterator[WaveletIndex]:
        for l in range(len(self.levels)):
            for k in range(2 ** l):
                yield WaveletIndex(l, k)


@dataclass(frozen=True)
class WaveletBasis:
    """Sampled orthonormal basis: constant scaling function + wavelets."""

    kind: str
    order: int
    L_max: int
    grid: DyadicGrid
    columns: np.ndarray = field(repr=False)  # (N, 2^(L_max+1)); col 0 = scaling

    @property
    def dim(self) -> int:
        return self.columns.shape[1]

    def column_of(self, idx: WaveletIndex) -> int:
        if idx.level > self.L_max:
            raise IndexError(f"level {idx.level} beyond basis L_max={self.L_max}")
        return 1 + (2 ** idx.level - 1) + idx.position

    def function(self, idx: WaveletIndex) -> GridFunction:
        return GridFunction(self.grid, self.columns[:, self.column_of(idx)])

    def scaling_function(self) -> GridFunction:
        return GridFunction(self.grid, self.columns[:, 0])

    def gram_deviation(self) -> float:
        B = self.columns / np.sqrt(self.grid.size)
        return float(np.abs(B.T @ B - np.eye(self.dim)).max())

    # --- analysis / synthesis -------------------------------------------
    def analyze(self, f: GridFunction) -> CoefficientTree:
        """Quadrature inner products of f with every basis function."""
        if f.grid.resolution != self.grid.resolution:
            raise_grid_mismatch(f, self)
        flat = self.columns.T @ f.values / self.grid.size
        return CoefficientTree.from_flat(flat, self.L_max)

    def synthesize(self, coeffs: CoefficientTree) -> GridFunction:
        if coeffs.max_level > self.L_max:
            raise IndexError(
                f"coefficients reach level {coeffs.max_level} beyond basis "
                f"L_max={self.L_max}"
            )
        flat = np.zeros(self.dim)
        flat[0] = coeffs.scaling
        pos = 1
        for a in coeffs.levels:
            flat[pos:pos + a.size] = a
            pos += a.size
        return GridFunction(self.grid, self.columns @ flat)

    def synthesize_flat(self, flat: np.ndarray) -> np.ndarray:
        """Batch synthesis: rows of `flat` are coefficient vectors."""
        return flat @ self.columns.T

    def project_low(self, f: GridFunction, L: int) -> GridFunction:
        if not 0 <= L <= self.L_max:
            raise IndexError(f"projection level {L} out of range 0..{self.L_max}")
        tree = self.analyze(f)
        kept = CoefficientTree(tree.scaling, tree.levels[: L + 1])
        return self.synthesize(kept)

    def localisation_sum(self, l: int) -> float:
        """max over grid points of sum_k |psi_lk(x)|."""
        if not 0 <= l <= self.L_max:
            raise IndexError(f"level {l} out of range 0..{self.L_max}")
        lo = 1 + (2 ** l - 1)
        block = self.columns[:, lo:lo + 2 ** l]
        return float(np.abs(block).sum(axis=1).max())


def raise_grid_mismatch(f, basis):
    from .grids import GridMismatchError

    raise GridMismatchError(
        f"function grid J={f.grid.resolution} does not match basis grid "
        f"J={basis.grid.resolution}"
    )


def default_resolution(L_max: int) -> int:
    return max(12, L_max + 4)


def build_basis(kind: str, L_max: int, J: int | None = None, order: int = 4) -> WaveletBasis:
    """Build a sampled wavelet basis on the 2^J grid.

    kind: "haar" or "boundary-smooth".  J defaults to max(12, L_max + 4)
    and must satisfy J >= L_max + 2.
    """
    if L_max < 0:
        raise ValueError("L_max must be >= 0")
    if J is None:
        J = default_resolution(L_max)
    if J < L_max + 2:
        raise ResolutionError(
            f"grid resolution J={J} too coarse for L_max={L_max} (need J >= L_max + 2)"
        )
    grid = DyadicGrid(J)
    if kind == "haar":
        cols = _haar_columns(L_max, J)
        basis = WaveletBasis("haar", 1, L_max, grid, cols)
        tol = HAAR_GRAM_TOL
    elif kind == "boundary-smooth":
        if order < 2:
            raise ValueError("boundary-smooth order must be >= 2")
        cols = _boundary_smooth_columns(order, L_max, J)
        basis = WaveletBasis("boundary-smooth", order, L_max, grid, cols)
        tol = SMOOTH_GRAM_TOL
    else:
        raise ValueError(f"unknown basis kind {kind!r}")
    dev = basis.gram_deviation()
    if dev > tol:
        raise BasisConstructionError(f"Gram deviation {dev:.2e} exceeds {tol:.0e}")
    return basis
