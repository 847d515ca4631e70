"""Batched strand tracing, the hot kernel of the exact diagram algebra.

Multiplying two diagram sums composes every pair of basis diagrams, and the
per-pair work is pure integer array chasing.  The jitted kernel runs that
loop compiled; a plain Python implementation with identical semantics acts
as the fallback and as the reference in tests.

Backend selection: environment variable ``TLQA_BACKEND`` set to ``numba`` or
``python`` forces a backend, anything else (or unset) autodetects.  See
``benchmarks/bench_compose.py`` for a speed comparison of the two paths.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit
    _HAVE_NUMBA = True
except Exception:  # pragma: no cover - numba is an optional speedup
    njit = None
    _HAVE_NUMBA = False


def _backend_choice() -> str:
    env = os.environ.get("TLQA_BACKEND", "auto").lower()
    if env in ("numba", "python"):
        if env == "numba" and not _HAVE_NUMBA:
            raise RuntimeError("TLQA_BACKEND=numba but numba is not importable")
        return env
    return "numba" if _HAVE_NUMBA else "python"


def _compose_batch_py(up: np.ndarray, ub: int, ut: int,
                      lo: np.ndarray, lb: int, lt: int):
    """All-pairs composition; up[i] above lo[j], row index i*nlo+j."""
    if ub != lt:
        raise ValueError("glued row size mismatch")
    nup, nlo = up.shape[0], lo.shape[0]
    s = ub
    out_n = lb + ut
    res = np.empty((nup * nlo, out_n), dtype=np.int64)
    loops = np.zeros(nup * nlo, dtype=np.int64)
    seen = np.zeros(max(s, 1), dtype=np.bool_)
    for i in range(nup):
        u = up[i]
        for j in range(nlo):
            l = lo[j]
            row = i * nlo + j
            r = res[row]
            r[:] = -1
            seen[:s] = False
            for start in range(out_n):
                if r[start] >= 0:
                    continue
                if start < lb:
                    side, v = 0, start
                else:
                    side, v = 1, start - lb + s
                while True:
                    if side == 0:
                        v = l[v]
                        if v < lb:
                            end = v
                            break
                        m = v - lb
                        seen[m] = True
                        side, v = 1, m
                    else:
                        v = u[v]
                        if v >= s:
                            end = v - s + lb
                            break
                        seen[v] = True
                        side, v = 0, lb + v
                r[start] = end
                r[end] = start
            c = 0
            for m in range(s):
                if seen[m]:
                    continue
                c += 1
                v = m
                while True:
                    seen[v] = True
                    w = u[v]
                    seen[w] = True
                    v = l[lb + w] - lb
                    if v == m:
                        break
            loops[row] = c
    return res, loops


if _HAVE_NUMBA:

    @njit(cache=True)
    def _compose_batch_nb(up, ub, ut, lo, lb, lt):  # pragma: no cover - jitted
        nup, nlo = up.shape[0], lo.shape[0]
        s = ub
        out_n = lb + ut
        res = np.empty((nup * nlo, out_n), dtype=np.int64)
        loops = np.zeros(nup * nlo, dtype=np.int64)
        seen = np.zeros(max(s, 1), dtype=np.bool_)
        for i in range(nup):
            for j in range(nlo):
                row = i * nlo + j
                for t in range(out_n):
                    res[row, t] = -1
                for t in range(s):
                    seen[t] = False
                for start in range(out_n):
                    if res[row, start] >= 0:
                        continue
                    if start < lb:
                        side = 0
                        v = start
                    else:
                        side = 1
                        v = start - lb + s
                    end = -1
                    while True:
                        if side == 0:
                            v = lo[j, v]
                            if v < lb:
                                end = v
                                break
                            m = v - lb
                            seen[m] = True
                            side = 1
                            v = m
                        else:
                            v = up[i, v]
                            if v >= s:
                                end = v - s + lb
                                break
                            seen[v] = True
                            side = 0
                            v = lb + v
                    res[row, start] = end
                    res[row, end] = start
                c = 0
                for m in range(s):
                    if seen[m]:
                        continue
                    c += 1
                    v = m
                    while True:
                        seen[v] = True
                        w = up[i, v]
                        seen[w] = True
                        v = lo[j, lb + w] - lb
                        if v == m:
                            break
                loops[row] = c
        return res, loops


def compose_batch(up: np.ndarray, ub: int, ut: int,
                  lo: np.ndarray, lb: int, lt: int):
    """Compose every upper row with every lower row.

    Returns (res, loops): res has shape (nup*nlo, lb+ut) with the partner
    arrays of the stacked diagrams, loops the closed-loop counts.
    """
    if _backend_choice() == "numba":
        return _compose_batch_nb(up, ub, ut, lo, lb, lt)
    return _compose_batch_py(up, ub, ut, lo, lb, lt)


def group_rows(mat: np.ndarray):
    """(unique_rows, counts) for a 2-d int array, deterministic order."""
    if mat.shape[0] == 0:
        return mat, np.zeros(0, dtype=np.int64)
    order = np.lexsort(mat.T[::-1])
    sm = mat[order]
    if sm.shape[0] == 1:
        return sm, np.ones(1, dtype=np.int64)
    diff = np.any(sm[1:] != sm[:-1], axis=1)
    idx = np.concatenate(([0], np.nonzero(diff)[0] + 1))
    counts = np.diff(np.concatenate((idx, [sm.shape[0]])))
    return sm[idx], counts
