"""Dense multivariate-polynomial kernels with numba and numpy backends.

Polynomials over n variables are stored densely as coefficient vectors
indexed by the graded-lexicographic rank of the exponent multi-index:
ascending total degree, ties broken by ascending lexicographic order of the
exponent tuple. The order is degree-major, so the index space for degree
<= d is a prefix of the space for degree <= d+1 and ranks never shift as
polynomials grow.

Backend selection: the environment variable EXACTPOLY_BACKEND chooses
"numba" (jit-compiled loops, interval endpoints nudged outward after every
operation) or "numpy" (vectorized; identical per-operation nudging via the
np.nextafter ufunc, with one aggregated widening step for the final
accumulation). Unset, numba is used when importable, with a printed warning
and numpy fallback otherwise.
"""

from __future__ import annotations

import os
import threading
from math import comb

import numpy as np

_ENV_FLAG = "EXACTPOLY_BACKEND"


def _resolve_backend() -> tuple:
    choice = os.environ.get(_ENV_FLAG, "").strip().lower()
    if choice not in ("", "numba", "numpy"):
        print(
            f"Warning: unknown {_ENV_FLAG}={choice!r}; expected 'numba' or "
            "'numpy'. Using default resolution."
        )
        choice = ""
    if choice == "numpy":
        return "numpy", None
    try:
        import numba
    except ImportError:
        if choice == "numba":
            print("Warning: Numba requested but not installed, falling back to NumPy (slower)")
        else:
            print("Warning: Numba not installed, falling back to NumPy (slower)")
        return "numpy", None
    return "numba", numba


BACKEND, _numba = _resolve_backend()


def using_numba() -> bool:
    return BACKEND == "numba"


# ---------------------------------------------------------------------------
# Graded-lexicographic index space

class IndexSpace:
    """Rank/unrank tables for exponent multi-indices over ``nvars`` variables.

    Built lazily up to the highest degree requested; all arrays for lower
    degrees are prefixes of the same storage.
    """

    def __init__(self, nvars: int):
        if nvars < 1:
            raise ValueError("need at least one variable")
        self.nvars = nvars
        self._deg = -1
        self._exps = np.zeros((0, nvars), dtype=np.int64)
        self._rank_of: dict = {}
        self._bumps = np.zeros((nvars, 0), dtype=np.int64)
        self._binom = np.zeros((1, 1), dtype=np.int64)
        self._lock = threading.Lock()

    def n_ranks(self, deg: int) -> int:
        """Number of multi-indices with total degree <= deg."""
        return comb(deg + self.nvars, self.nvars)

    def _degree_block(self, degree: int) -> list:
        """All exponent tuples of exact total degree, lex ascending."""
        n = self.nvars
        out = []

        def rec(prefix, remaining, slots):
            if slots == 1:
                out.append(prefix + (remaining,))
                return
            for k in range(remaining + 1):
                rec(prefix + (k,), remaining - k, slots - 1)

        rec((), degree, n)
        return out

    def ensure(self, deg: int) -> None:
        if deg <= self._deg:
            return
        with self._lock:
            if deg <= self._deg:
                return
            n = self.nvars
            blocks = [self._exps]
            for d in range(self._deg + 1, deg + 1):
                block = np.array(self._degree_block(d), dtype=np.int64)
                base = len(self._rank_of) + sum(
                    len(b) for b in blocks[1:]
                )
                for off, row in enumerate(block):
                    self._rank_of[tuple(int(x) for x in row)] = base + off
                blocks.append(block)
            exps = np.concatenate(blocks, axis=0) if len(blocks) > 1 else self._exps
            # binomial table: rows to (2*deg + n + 2) for product ranking,
            # columns only to nvars (the largest lower index the rank
            # formula uses), keeping every entry far inside int64.
            amax = 2 * deg + n + 2
            binom = np.zeros((amax + 1, n + 1), dtype=np.int64)
            for a in range(amax + 1):
                for b in range(min(a, n) + 1):
                    binom[a, b] = comb(a, b)
            # bump targets: rank of kappa + e_i, defined for every kappa of
            # degree <= deg - 1 (targets stay inside this table).
            r_prev = comb(deg - 1 + n, n) if deg >= 1 else 0
            bumps = np.zeros((n, r_prev), dtype=np.int64)
            for r in range(r_prev):
                row = exps[r]
                for i in range(n):
                    key = tuple(int(x) for x in row) if False else None
                    bumped = tuple(
                        int(row[j]) + (1 if j == i else 0) for j in range(n)
                    )
                    bumps[i, r] = self._rank_of[bumped]
            self._exps = exps
            self._bumps = bumps
            self._binom = binom
            self._deg = deg

    def exps(self, deg: int) -> np.ndarray:
        self.ensure(deg)
        return self._exps[: self.n_ranks(deg)]

    def bumps(self, deg: int) -> np.ndarray:
        """Bump table covering ranks of degree <= deg (targets <= deg+1)."""
        self.ensure(deg + 1)
        return self._bumps[:, : self.n_ranks(deg)]

    def binom(self, deg: int) -> np.ndarray:
        self.ensure(deg)
        return self._binom

    def rank(self, kappa) -> int:
        key = tuple(int(k) for k in kappa)
        if len(key) != self.nvars or any(k < 0 for k in key):
            raise ValueError(f"bad multi-index {kappa!r} for {self.nvars} variables")
        self.ensure(sum(key))
        return self._rank_of[key]


_spaces: dict = {}
_spaces_lock = threading.Lock()


def index_space(nvars: int) -> IndexSpace:
    space = _spaces.get(nvars)
    if space is None:
        with _spaces_lock:
            space = _spaces.get(nvars)
            if space is None:
                space = IndexSpace(nvars)
                _spaces[nvars] = space
    return space


def rank_many(exps: np.ndarray, binom: np.ndarray) -> np.ndarray:
    """Vectorized graded-lex rank of each row of an exponent matrix."""
    exps = np.asarray(exps, dtype=np.int64)
    n = exps.shape[1]
    d = exps.sum(axis=1)
    rank = binom[d + n - 1, n]
    rem = d.copy()
    for i in range(n):
        m = n - i - 1
        k = exps[:, i]
        rank = rank + binom[rem + m, m] - binom[rem - k + m, m]
        rem = rem - k
    return rank


# ---------------------------------------------------------------------------
# Numba kernels

if using_numba():
    from numba import njit

    @njit(cache=True)
    def _nb_affine_mul(c, bumps, w, b, out):
        nr = c.shape[0]
        n = w.shape[0]
        for r in range(nr):
            cr = c[r]
            if cr != 0.0:
                out[r] += b * cr
                for i in range(n):
                    out[bumps[i, r]] += w[i] * cr

    @njit(cache=True)
    def _nb_general_mul(ca, ea, cb, eb, binom, n, out):
        na = ca.shape[0]
        nb_ = cb.shape[0]
        for x in range(na):
            cx = ca[x]
            if cx == 0.0:
                continue
            for y in range(nb_):
                cy = cb[y]
                if cy == 0.0:
                    continue
                d = 0
                for i in range(n):
                    d += ea[x, i] + eb[y, i]
                rank = binom[d + n - 1, n]
                rem = d
                for i in range(n):
                    m = n - i - 1
                    k = ea[x, i] + eb[y, i]
                    rank += binom[rem + m, m] - binom[rem - k + m, m]
                    rem -= k
                out[rank] += cx * cy

    @njit(cache=True)
    def _nb_eval_dense(c, exps, x_pts, deg, out):
        npts, n = x_pts.shape
        nr = c.shape[0]
        pw = np.empty((n, deg + 1))
        for p in range(npts):
            for i in range(n):
                pw[i, 0] = 1.0
                for k in range(1, deg + 1):
                    pw[i, k] = pw[i, k - 1] * x_pts[p, i]
            acc = 0.0
            for r in range(nr):
                t = c[r]
                if t != 0.0:
                    for i in range(n):
                        t *= pw[i, exps[r, i]]
                    acc += t
            out[p] = acc

    @njit(cache=True)
    def _nb_bound_dense(c, exps, plo, phi, n):
        lo_total = 0.0
        hi_total = 0.0
        nr = c.shape[0]
        for r in range(nr):
            cr = c[r]
            if cr == 0.0:
                continue
            lo = cr
            hi = cr
            for i in range(n):
                e = exps[r, i]
                a = plo[i, e]
                b = phi[i, e]
                p1 = lo * a
                p2 = lo * b
                p3 = hi * a
                p4 = hi * b
                lo = min(min(p1, p2), min(p3, p4))
                hi = max(max(p1, p2), max(p3, p4))
                lo = np.nextafter(lo, -np.inf)
                hi = np.nextafter(hi, np.inf)
            lo_total = np.nextafter(lo_total + lo, -np.inf)
            hi_total = np.nextafter(hi_total + hi, np.inf)
        return lo_total, hi_total


# ---------------------------------------------------------------------------
# Public kernels (backend-dispatched)

def affine_mul(coeffs: np.ndarray, nvars: int, deg: int, w, b) -> np.ndarray:
    """Multiply a dense degree-<=deg polynomial by (w . x + b).

    Returns the dense coefficient vector of the degree-(deg+1) product.
    """
    space = index_space(nvars)
    bumps = space.bumps(deg)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    if coeffs.shape[0] != space.n_ranks(deg):
        raise ValueError("coefficient length does not match degree")
    w = np.ascontiguousarray(w, dtype=np.float64)
    out = np.zeros(space.n_ranks(deg + 1))
    if using_numba():
        _nb_affine_mul(coeffs, bumps, w, float(b), out)
        return out
    out[: coeffs.shape[0]] += float(b) * coeffs
    for i in range(nvars):
        # kappa -> kappa + e_i is injective, so plain fancy indexing is a
        # correct scatter-add for each slot.
        out[bumps[i]] += w[i] * coeffs
    return out


def general_mul(
    ca: np.ndarray, deg_a: int, cb: np.ndarray, deg_b: int, nvars: int
) -> np.ndarray:
    """Dense product of two dense polynomials (degrees deg_a, deg_b)."""
    space = index_space(nvars)
    deg_out = deg_a + deg_b
    space.ensure(deg_out)
    ca = np.ascontiguousarray(ca, dtype=np.float64)
    cb = np.ascontiguousarray(cb, dtype=np.float64)
    ea = space.exps(deg_a)
    eb = space.exps(deg_b)
    if ca.shape[0] != ea.shape[0] or cb.shape[0] != eb.shape[0]:
        raise ValueError("coefficient length does not match degree")
    out = np.zeros(space.n_ranks(deg_out))
    binom = space.binom(deg_out)
    if using_numba():
        _nb_general_mul(ca, ea, cb, eb, binom, nvars, out)
        return out
    ia = np.flatnonzero(ca)
    ib = np.flatnonzero(cb)
    if ia.size == 0 or ib.size == 0:
        return out
    chunk = max(1, 4_000_000 // max(1, ib.size))
    for start in range(0, ia.size, chunk):
        sel = ia[start : start + chunk]
        sums = (ea[sel][:, None, :] + eb[ib][None, :, :]).reshape(-1, nvars)
        prods = (ca[sel][:, None] * cb[ib][None, :]).ravel()
        ranks = rank_many(sums, binom)
        np.add.at(out, ranks, prods)
    return out


def eval_dense(coeffs: np.ndarray, nvars: int, deg: int, points: np.ndarray) -> np.ndarray:
    """Evaluate a dense polynomial at rows of ``points`` (double precision)."""
    space = index_space(nvars)
    exps = space.exps(deg)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    if coeffs.shape[0] != exps.shape[0]:
        raise ValueError("coefficient length does not match degree")
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[None, :]
    if points.shape[1] != nvars:
        raise ValueError("point dimension does not match variable count")
    out = np.empty(points.shape[0])
    if using_numba():
        _nb_eval_dense(coeffs, exps, points, deg, out)
        return out
    # powers per point and variable: (npts, nvars, deg+1)
    npts = points.shape[0]
    chunk = max(1, 8_000_000 // max(1, coeffs.shape[0]))
    for start in range(0, npts, chunk):
        sub = points[start : start + chunk]
        pw = np.ones((sub.shape[0], nvars, deg + 1))
        for k in range(1, deg + 1):
            pw[:, :, k] = pw[:, :, k - 1] * sub
        term_vals = np.broadcast_to(coeffs, (sub.shape[0], coeffs.shape[0])).copy()
        for i in range(nvars):
            term_vals *= pw[:, i, exps[:, i]]
        out[start : start + chunk] = term_vals.sum(axis=1)
    return out


def bound_dense(
    coeffs: np.ndarray, nvars: int, deg: int, pow_lo: np.ndarray, pow_hi: np.ndarray
) -> tuple:
    """Outward-rounded interval bound of a dense polynomial over a box.

    ``pow_lo``/``pow_hi`` are (nvars, deg+1) enclosures of each variable's
    powers over the box (pow_lo[i, k] <= x_i^k <= pow_hi[i, k] for all x in
    the box), themselves already outward-rounded by the caller.
    """
    space = index_space(nvars)
    exps = space.exps(deg)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    if coeffs.shape[0] != exps.shape[0]:
        raise ValueError("coefficient length does not match degree")
    pow_lo = np.ascontiguousarray(pow_lo, dtype=np.float64)
    pow_hi = np.ascontiguousarray(pow_hi, dtype=np.float64)
    if pow_lo.shape != (nvars, deg + 1) or pow_hi.shape != (nvars, deg + 1):
        raise ValueError("power-table shape mismatch")
    if using_numba():
        return _nb_bound_dense(coeffs, exps, pow_lo, pow_hi, nvars)
    lo = coeffs.copy()
    hi = coeffs.copy()
    neg_inf = np.float64(-np.inf)
    pos_inf = np.float64(np.inf)
    for i in range(nvars):
        a = pow_lo[i, exps[:, i]]
        b = pow_hi[i, exps[:, i]]
        p1 = lo * a
        p2 = lo * b
        p3 = hi * a
        p4 = hi * b
        lo = np.nextafter(np.minimum(np.minimum(p1, p2), np.minimum(p3, p4)), neg_inf)
        hi = np.nextafter(np.maximum(np.maximum(p1, p2), np.maximum(p3, p4)), pos_inf)
    # Aggregated widening for the final accumulation: pairwise summation
    # error is below n_terms * eps * sum(|x|).
    n_terms = coeffs.shape[0]
    eps = np.finfo(np.float64).eps
    lo_total = float(lo.sum())
    hi_total = float(hi.sum())
    slack_lo = n_terms * eps * float(np.abs(lo).sum())
    slack_hi = n_terms * eps * float(np.abs(hi).sum())
    lo_total = np.nextafter(lo_total - slack_lo, -np.inf)
    hi_total = np.nextafter(hi_total + slack_hi, np.inf)
    return float(lo_total), float(hi_total)


def truncate_dense(coeffs: np.ndarray, nvars: int, deg_from: int, deg_to: int) -> np.ndarray:
    """Drop terms above deg_to (prefix property of the graded order)."""
    if deg_to >= deg_from:
        return np.asarray(coeffs, dtype=np.float64)
    space = index_space(nvars)
    return np.asarray(coeffs, dtype=np.float64)[: space.n_ranks(deg_to)].copy()


def tail_abs_sum(coeffs: np.ndarray, nvars: int, deg_from: int, deg_to: int) -> float:
    """Sum of |coefficients| of the terms a truncation to deg_to drops."""
    if deg_to >= deg_from:
        return 0.0
    space = index_space(nvars)
    cut = space.n_ranks(deg_to)
    return float(np.abs(np.asarray(coeffs, dtype=np.float64)[cut:]).sum())
