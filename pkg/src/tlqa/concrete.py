"""Faithful matrix realization on tensor powers of a based algebra.

The base object is a finite dimensional C*-algebra B given by its block
sizes, carrying the trace whose multiplication satisfies m m* = (dim B) id.
Strand pairs of the abstract calculus correspond to tensor factors of B, and
an even diagram acts on B-tensor powers through the elementary dictionary

    inner arc of a factor   <->  unit map, weight delta^(+1/2)
    arc across two factors  <->  multiplication map, weight delta^(-1/2)

(with adjoints for the mirror images).  Any even diagram factors into a
sequence of such elementary arcs by repeatedly peeling adjacent pairs, which
is how ``apply_diagram`` evaluates it matrix-free on a batch of vectors.

On top of the raw evaluation sits a compressed tower: orthonormal bases
``Q[k]`` of the ranges of the represented wall projectors, built by a
two-step recursion entirely inside B x H_{k-1}, which keeps every dense
object at most (dim B)^k by (dim B) d_{k-1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import elements as el
from .diagrams import TLDiagram
from .qarith import q_from_delta


class RepresentationError(ValueError):
    """Odd gradings have no concrete image."""


class BudgetError(RuntimeError):
    """A tensor power exceeds the configured dimension budget."""


DEFAULT_BUDGET = 20_000


@dataclass(frozen=True)
class AlgebraSpec:
    blocks: tuple[int, ...]

    def __post_init__(self):
        if not self.blocks or any(b < 1 for b in self.blocks):
            raise ValueError("block sizes must be positive")
        if self.dim < 4:
            raise ValueError("algebras of dimension < 4 are out of range here")

    @property
    def dim(self) -> int:
        return sum(b * b for b in self.blocks)

    @property
    def delta(self) -> float:
        return math.sqrt(self.dim)

    @staticmethod
    def parse(text: str) -> "AlgebraSpec":
        try:
            blocks = tuple(int(x) for x in text.replace(" ", "").split(",") if x)
        except ValueError as exc:
            raise ValueError(f"bad block list {text!r}") from exc
        return AlgebraSpec(blocks)

    def label(self) -> str:
        return ",".join(str(b) for b in self.blocks)


class StructureMaps:
    """Multiplication and unit of B in a trace-orthonormal basis."""

    def __init__(self, spec: AlgebraSpec, budget: int = DEFAULT_BUDGET):
        self.spec = spec
        self.budget = budget
        n = spec.dim
        self.dim = n
        self.delta = spec.delta
        self.q = q_from_delta(self.delta, dimB=n).q
        # basis: matrix units of each block scaled to unit trace norm
        scale = {}
        index = []
        for bi, bs in enumerate(spec.blocks):
            s = math.sqrt(n / bs)
            for a in range(bs):
                for b in range(bs):
                    scale[(bi, a, b)] = s
                    index.append((bi, a, b))
        self.basis_index = index
        pos = {t: i for i, t in enumerate(index)}
        m = np.zeros((n, n, n))
        for i, (bi, a, b) in enumerate(index):
            for j, (bj, c, d) in enumerate(index):
                if bi != bj or b != c:
                    continue
                k = pos[(bi, a, d)]
                m[k, i, j] = scale[(bi, a, b)] * scale[(bj, c, d)] / scale[(bi, a, d)]
        self.mmat = m.reshape(n, n * n)
        nu = np.zeros(n)
        for i, (bi, a, b) in enumerate(index):
            if a == b:
                nu[i] = 1.0 / scale[(bi, a, b)]
        self.nu = nu
        self.mstar = self.mmat.T.copy()
        self._tower: Tower | None = None

    def check_budget(self, factors: int):
        if self.dim ** factors > self.budget:
            raise BudgetError(
                f"tensor power {self.dim}^{factors} exceeds budget {self.budget}")

    def relation_residuals(self) -> dict[str, float]:
        """Largest deviations in the defining relations of (m, nu)."""
        n = self.dim
        m = self.mmat
        out = {}
        out["mm* = delta^2 id"] = float(np.abs(m @ m.T - self.dim * np.eye(n)).max())
        out["nu*nu = 1"] = abs(float(self.nu @ self.nu) - 1.0)
        m3_a = m @ np.kron(m, np.eye(n))
        m3_b = m @ np.kron(np.eye(n), m)
        out["associativity"] = float(np.abs(m3_a - m3_b).max())
        unit_r = m @ np.kron(np.eye(n), self.nu.reshape(n, 1)).reshape(n * n, n)
        unit_l = m @ np.kron(self.nu.reshape(n, 1), np.eye(n)).reshape(n * n, n)
        out["unit law"] = float(max(np.abs(unit_r - np.eye(n)).max(),
                                    np.abs(unit_l - np.eye(n)).max()))
        frob_l = m.T @ m
        frob_r = np.kron(m, np.eye(n)) @ np.kron(np.eye(n), m.T)
        out["m*m = (m x id)(id x m*)"] = float(np.abs(frob_l - frob_r).max())
        return out

    def tower(self, kmax: int) -> "Tower":
        if self._tower is None or self._tower.kmax < kmax:
            self._tower = Tower(self, kmax)
        return self._tower


def build_structure_maps(spec: AlgebraSpec, budget: int = DEFAULT_BUDGET) -> StructureMaps:
    maps = StructureMaps(spec, budget)
    res = maps.relation_residuals()
    worst = max(res.values())
    if worst > 1e-10:
        raise ArithmeticError(f"structure map relations violated: {res}")
    return maps


# ---------------------------------------------------------------------------
# Diagram evaluation


@lru_cache(maxsize=None)
def _diagram_program(bottom: int, top: int, partner: tuple):
    """Sequence of elementary arc operations realizing an even diagram.

    Returns (ops, half_weight) where ops is a list of
    ("cap_nu", j) / ("cap_m", j) / ("cup_nu", j) / ("cup_m", j) acting on the
    current factor list (j is 0-based), in application order, and
    half_weight counts powers of delta^(1/2): +1 per unit arc, -1 per
    multiplication arc.
    """
    if bottom % 2 or top % 2:
        raise RepresentationError("odd gradings have no concrete image")
    ops = []
    half = 0
    # peel lower arcs (contractions)
    alive = list(range(bottom))
    pairs = {i: partner[i] for i in range(bottom) if partner[i] < bottom}
    while pairs:
        for posn in range(len(alive) - 1):
            i, j = alive[posn], alive[posn + 1]
            if pairs.get(i) == j:
                break
        else:
            raise AssertionError("no adjacent lower arc found")
        if posn % 2 == 0:
            ops.append(("cap_nu", posn // 2))
            half += 1
        else:
            ops.append(("cap_m", (posn - 1) // 2))
            half -= 1
        alive = alive[:posn] + alive[posn + 2:]
        del pairs[i], pairs[j]
    # the surviving lower points must connect through in order
    through_src = alive
    # peel upper arcs; record in removal order, apply reversed
    alive_t = list(range(bottom, bottom + top))
    pairs_t = {i: partner[i] for i in alive_t if partner[i] >= bottom}
    insertions = []
    while pairs_t:
        for posn in range(len(alive_t) - 1):
            i, j = alive_t[posn], alive_t[posn + 1]
            if pairs_t.get(i) == j:
                break
        else:
            raise AssertionError("no adjacent upper arc found")
        if posn % 2 == 0:
            insertions.append(("cup_nu", posn // 2))
            half += 1
        else:
            insertions.append(("cup_m", (posn - 1) // 2))
            half -= 1
        alive_t = alive_t[:posn] + alive_t[posn + 2:]
        del pairs_t[i], pairs_t[j]
    through_dst = alive_t
    if len(through_src) != len(through_dst):
        raise AssertionError("through strand mismatch")
    for s, d in zip(through_src, through_dst):
        if partner[s] != d:
            raise AssertionError("through strands are permuted")
    ops.extend(reversed(insertions))
    return tuple(ops), half


def apply_diagram(d: TLDiagram, maps: StructureMaps, x: np.ndarray) -> np.ndarray:
    """Evaluate the diagram on a batch: x has shape (dim^(bottom/2), batch)."""
    return apply_partner(d.bottom, d.top, d.partner, maps, x)


def apply_partner(bottom: int, top: int, partner: tuple, maps: StructureMaps,
                  x: np.ndarray) -> np.ndarray:
    n = maps.dim
    ops, half = _diagram_program(bottom, top, partner)
    u = bottom // 2
    maps.check_budget(max(u, top // 2))
    batch = x.shape[1]
    if x.shape[0] != n**u:
        raise ValueError("input dimension does not match the lower grading")
    cur = x
    for op, j in ops:
        if op == "cap_nu":
            cur = cur.reshape(n**j, n, -1)
            cur = np.tensordot(maps.nu, cur, axes=(0, 1)).reshape(n**(u - 1), -1)
            u -= 1
        elif op == "cap_m":
            cur = cur.reshape(n**j, n * n, -1)
            cur = np.einsum("pq,aqb->apb", maps.mmat, cur,
                            optimize=True).reshape(n**(u - 1), -1)
            u -= 1
        elif op == "cup_nu":
            cur = cur.reshape(n**j, -1)
            cur = np.einsum("p,ab->apb", maps.nu,
                            cur.reshape(n**j, -1)).reshape(n**(u + 1), -1)
            u += 1
        else:  # cup_m
            cur = cur.reshape(n**j, n, -1)
            cur = np.einsum("qp,apb->aqb", maps.mstar, cur,
                            optimize=True).reshape(n**(u + 1), -1)
            u += 1
        maps.check_budget(u)
    if u != top // 2:
        raise AssertionError("grading bookkeeping broken")
    return (maps.delta ** (half / 2.0)) * cur.reshape(n**u, batch)


def apply_element(x: el.TLElement, maps: StructureMaps, vecs: np.ndarray) -> np.ndarray:
    """Evaluate a diagram sum on a batch of column vectors."""
    n = maps.dim
    out = np.zeros((n ** (x.top // 2), vecs.shape[1]))
    if x.is_zero():
        return out
    coeffs = x.evalf(maps.q)
    for key, c in coeffs.items():
        out += c * apply_partner(x.bottom, x.top, key, maps, vecs)
    return out


def represent(x: el.TLElement, maps: StructureMaps) -> np.ndarray:
    """Dense matrix of an element, columns indexed by the lower basis."""
    n = maps.dim
    src = n ** (x.bottom // 2)
    maps.check_budget(max(x.bottom // 2, x.top // 2))
    return apply_element(x, maps, np.eye(src))


def evaluate_diagram(d: TLDiagram, maps: StructureMaps) -> np.ndarray:
    return represent(el.from_diagram(d), maps)


def hs_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def operator_norm(a, tol: float = 1e-10, max_iter: int = 20_000) -> float:
    """Largest singular value by power iteration on a*a.

    ``a`` is a dense matrix or a pair (matvec, rmatvec, (rows, cols)).  The
    start vector is deterministic, and a second deterministic restart guards
    against an unlucky orthogonal start.
    """
    if isinstance(a, np.ndarray):
        rows, cols = a.shape
        mv = lambda v: a @ v
        rmv = lambda v: a.T @ v
    else:
        mv, rmv, (rows, cols) = a
    best = 0.0
    for attempt in (0, 1):
        rng = np.random.default_rng(12345 + attempt)
        v = rng.standard_normal(cols)
        nv = np.linalg.norm(v)
        if nv == 0:
            continue
        v /= nv
        lam = 0.0
        for _ in range(max_iter):
            w = rmv(mv(v))
            nw = np.linalg.norm(w)
            if nw == 0:
                lam = 0.0
                break
            lam_new = float(v @ w)
            v = w / nw
            if abs(lam_new - lam) <= tol * max(lam_new, 1e-300):
                lam = lam_new
                break
            lam = lam_new
        best = max(best, lam)
        if best > 0:
            break
    return math.sqrt(max(best, 0.0))


# ---------------------------------------------------------------------------
# The compressed tower of standard subspaces


class Tower:
    """Orthonormal bases of the represented wall-projector ranges.

    Q[k] has shape (dim^k, d_k); d_k is the numeric rank of the represented
    projector, certified by an eigenvalue gap around {0, 1}.
    """

    def __init__(self, maps: StructureMaps, kmax: int, gap_tol: float = 1e-8):
        self.maps = maps
        self.kmax = kmax
        self.gap_tol = gap_tol
        n = maps.dim
        self.Q: list[np.ndarray] = [np.ones((1, 1))]
        self.dims = [1]
        if kmax >= 1:
            maps.check_budget(1)
            p2 = np.eye(n) - np.outer(maps.nu, maps.nu)
            self._append_from_projector(p2, np.eye(n))
        for k in range(2, kmax + 1):
            maps.check_budget(k)
            self._extend(k)

    def _append_from_projector(self, phat: np.ndarray, embed: np.ndarray):
        w, v = np.linalg.eigh(phat)
        ones = w > 0.5
        low = w[~ones]
        high = w[ones]
        if (low.size and np.abs(low).max() > self.gap_tol) or \
           (high.size and np.abs(high - 1).max() > self.gap_tol):
            raise ArithmeticError("projector spectrum has no clean 0/1 gap")
        basis = embed @ v[:, ones]
        # re-orthonormalize to kill accumulated roundoff
        qb, _ = np.linalg.qr(basis)
        self.Q.append(qb)
        self.dims.append(int(ones.sum()))

    def _extend(self, k: int):
        """Range of the represented 2k-wall inside B x H_{k-1}."""
        maps = self.maps
        n = maps.dim
        qprev = self.Q[k - 1]
        dprev = self.dims[k - 1]
        embed = np.kron(np.eye(n), qprev)          # dim^k x (n d_{k-1})
        pprev = qprev @ qprev.T                     # dense projector, dim^(k-1)
        # right factor (p_{2k-2} x 1_2) applied to the embedding
        right = embed.reshape(n ** (k - 1), n * n * dprev)
        right = (pprev @ right).reshape(n ** k, n * dprev)
        mid = el.two_step_middle(k - 1)
        acted = apply_element(mid, maps, right)
        # the left factor (1_2 x p_{2k-2}) is absorbed by the compression,
        # since the embedding columns span exactly B x H_{k-1}
        phat = embed.T @ acted
        phat = 0.5 * (phat + phat.T)
        self._append_from_projector(phat, embed)

    def projector(self, k: int) -> np.ndarray:
        q = self.Q[k]
        return q @ q.T

    def compress(self, k: int, vecs: np.ndarray) -> np.ndarray:
        return self.Q[k].T @ vecs


def irrep_dimension(maps: StructureMaps, k: int) -> int:
    """Numeric rank of the represented 2k-wall projector."""
    if k < 0:
        raise ValueError("block index must be >= 0")
    tower = maps.tower(k)
    return tower.dims[k]


def dimension_recursion(dimB: int, kmax: int) -> list[int]:
    """d_0 = 1, d_1 = dimB - 1, d_1 d_k = d_{k+1} + d_k + d_{k-1}."""
    dims = [1, dimB - 1]
    for k in range(1, kmax):
        dims.append(dims[1] * dims[k] - dims[k] - dims[k - 1])
    return dims[:kmax + 1]


# ---------------------------------------------------------------------------
# Distinguished represented vectors and the basis-change unitary


def t2_hat(maps: StructureMaps) -> np.ndarray:
    """The represented 2-arc isometry as a unit vector in B x B."""
    n = maps.dim
    vec = maps.mstar @ maps.nu
    p2 = np.eye(n) - np.outer(maps.nu, maps.nu)
    vec = np.kron(p2, p2) @ vec
    lam = 1.0 / math.sqrt(maps.dim - 1.0)   # [3] at q(delta) equals dim - 1
    return lam * vec


def t2k_hat(maps: StructureMaps, k: int) -> np.ndarray:
    """Represented 2k-arc vector in B^k x B^k, built recursively."""
    if k == 0:
        return np.ones(1)
    if k == 1:
        return t2_hat(maps)
    n = maps.dim
    tower = maps.tower(k)
    prev = t2k_hat(maps, k - 1)                     # in B^(k-1) x B^(k-1)
    t2 = t2_hat(maps)
    v = np.einsum("ab,cd->acdb", prev.reshape(n ** (k - 1), n ** (k - 1)),
                  t2.reshape(n, n), optimize=True).reshape(-1)
    # now v lives in B^(k-1) x B x B x B^(k-1) = B^k x B^k
    pk = tower.projector(k)
    v = v.reshape(n ** k, n ** k)
    v = (pk @ v @ pk.T).reshape(-1)
    # paper-normalised coefficient
    num = (q_number(maps.q, 2 * k - 1) * q_number(maps.q, 3)
           / q_number(maps.q, 2 * k + 1))
    return math.sqrt(num) * v


def q_number(q: float, a: int) -> float:
    if q == 1.0:
        return float(a)
    return (q**a - q**-a) / (q - 1.0 / q)


def basis_change_unitary(maps: StructureMaps) -> np.ndarray:
    """F with  t2 = (dim-1)^(-1/2) sum_i e_i x F e_i  on the compressed
    one-block space; unitary with F conj(F) = 1 in the trace model."""
    tower = maps.tower(1)
    q1 = tower.Q[1]
    d1 = tower.dims[1]
    t2c = q1.T @ (t2_hat(maps).reshape(maps.dim, maps.dim)) @ q1
    return math.sqrt(d1) * t2c.T


def block_flip(maps: StructureMaps, left_factors: int, right_factors: int) -> np.ndarray:
    """Permutation matrix of B^a x B^b -> B^b x B^a as ambient factors."""
    n = maps.dim
    a, b = left_factors, right_factors
    maps.check_budget(a + b)
    dim = n ** (a + b)
    idx = np.arange(dim).reshape(n**a, n**b)
    perm = idx.T.reshape(-1)
    out = np.zeros((dim, dim))
    out[np.arange(dim), perm] = 1.0
    return out
