"""Block analysis of the left-minus-right commutator operator.

Relative to the block decomposition of the GNS space, the commutator of the
spin-one matrix coefficients is block-tridiagonal: a block of index k feeds
the three neighbouring blocks through operators of the shape

    T(xi) = c_alpha (phiL xi phiR^t  -  sigma phiR xi (sigma* phiL)^t),

where the phi's are the six normalised intertwiners out of block k and sigma
flips the two tensor slots.  Everything here is computed on the compressed
spaces delivered by the tower, so a block operator is never materialised as
a dense matrix; norms and singular values go through structured power
iteration.

The module also houses the scalar constants of the lower-bound chain and the
verification of the twelve auxiliary identities behind the block formulas
(exact diagram algebra where no flip occurs, matrices where it does).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import concrete as cc
from . import elements as el
from .qarith import QProd, QRat, q_from_delta, q_integer, QRAT_ONE


def qn(q: float, a: int) -> float:
    return cc.q_number(q, a)


# ---------------------------------------------------------------------------
# Compressed intertwiners


class BlockModel:
    """Compressed intertwiners and block operators for one algebra."""

    def __init__(self, maps: cc.StructureMaps, K: int):
        self.maps = maps
        self.K = K
        n = maps.dim
        top = K + 1 if n ** (K + 1) <= maps.budget else K
        self.top = top
        self.tower = maps.tower(top)
        self.q = maps.q
        self._phi: dict = {}

    def dims(self, k: int) -> int:
        return self.tower.dims[k]

    def phi_hat(self, alpha: int, side: str, k: int) -> np.ndarray:
        """Compressed isometry H_k -> H_1 x H_{k+alpha} (side L) or
        H_{k+alpha} x H_1 (side R); rows flat over the two slots."""
        key = (alpha, side, k)
        if key in self._phi:
            return self._phi[key]
        if k + alpha > self.top:
            raise cc.BudgetError("target block beyond the tower")
        maps, tw = self.maps, self.tower
        n = maps.dim
        q1 = tw.Q[1]
        qk = tw.Q[k]
        qt = tw.Q[k + alpha]
        dk, dt, d1 = tw.dims[k], tw.dims[k + alpha], tw.dims[1]
        if alpha == 1:
            c = math.sqrt(qn(self.q, 3) * qn(self.q, 2 * k + 1) / qn(self.q, 2 * k + 3))
            t2 = cc.t2_hat(maps).reshape(n, n)
            if side == "L":
                w1 = q1.T @ t2                              # d1 x n
                m = qt.reshape(n, n**k, dt)
                kzm = np.einsum("zxm,xj->zmj", m, qk, optimize=True)
                out = np.einsum("az,zmj->amj", w1, kzm, optimize=True)
            else:
                w2 = t2 @ q1                                # n x d1
                m = qt.reshape(n**k, n, dt)
                y = np.einsum("xzm,zb->xmb", m, w2, optimize=True)
                out = np.einsum("xmb,xj->mbj", y, qk, optimize=True)
        elif alpha == 0:
            c = math.sqrt(qn(self.q, 2 * k) / qn(self.q, 2 * k + 2))
            if side == "L":
                y = maps.mstar @ qk.reshape(n, -1)          # n^2 x (n^(k-1) dk)
                y = y.reshape(n, n**k, dk)
                y = np.einsum("ya,yxj->axj", q1, y, optimize=True)
                out = np.einsum("axj,xm->amj", y, qt, optimize=True)
            else:
                y = qk.reshape(n ** (k - 1), n, dk)
                y = np.einsum("qp,apj->aqj", maps.mstar, y, optimize=True)
                y = y.reshape(n**k, n, dk)
                y = np.einsum("xyj,yb->xbj", y, q1, optimize=True)
                out = np.einsum("xbj,xm->mbj", y, qt, optimize=True)
        else:
            c = 1.0
            if side == "L":
                y = qk.reshape(n, n ** (k - 1), dk)
                y = np.einsum("ya,yxj->axj", q1, y, optimize=True)
                out = np.einsum("axj,xm->amj", y, qt, optimize=True)
            else:
                y = qk.reshape(n ** (k - 1), n, dk)
                y = np.einsum("xyj,yb->xbj", y, q1, optimize=True)
                out = np.einsum("xbj,xm->mbj", y, qt, optimize=True)
        rows = d1 * dt if side == "L" else dt * d1
        mat = c * out.reshape(rows, dk)
        dev = float(np.abs(mat.T @ mat - np.eye(dk)).max())
        if dev > 1e-8:
            raise ArithmeticError(f"intertwiner {key} fails isometry by {dev:.2e}")
        self._phi[key] = mat
        return mat

    def flip_left(self, alpha: int, k: int, mat: np.ndarray) -> np.ndarray:
        """Row reindex (m, b) -> (b, m): the slot flip on the target."""
        dt, d1 = self.dims(k + alpha), self.dims(1)
        dk = mat.shape[1]
        return mat.reshape(dt, d1, dk).transpose(1, 0, 2).reshape(d1 * dt, dk)

    def flip_right(self, alpha: int, k: int, mat: np.ndarray) -> np.ndarray:
        dt, d1 = self.dims(k + alpha), self.dims(1)
        dk = mat.shape[1]
        return mat.reshape(d1, dt, dk).transpose(1, 0, 2).reshape(dt * d1, dk)

    def block_factors(self, alpha: int, k: int):
        """(c, A, B, C, D) with T = c (A xi B^t - C xi D^t)."""
        phiL = self.phi_hat(alpha, "L", k)
        phiR = self.phi_hat(alpha, "R", k)
        if alpha == 1:
            c = math.sqrt(qn(self.q, 2 * k + 3) / qn(self.q, 2 * k + 1))
        elif alpha == 0:
            c = 1.0
        else:
            c = math.sqrt(qn(self.q, 2 * k - 1) / qn(self.q, 2 * k + 1))
        A = phiL
        B = phiR
        C = self.flip_left(alpha, k, phiR)
        D = self.flip_right(alpha, k, phiL)
        return c, A, B, C, D

    def apply_block(self, alpha: int, k: int, xi: np.ndarray) -> np.ndarray:
        c, A, B, C, D = self.block_factors(alpha, k)
        return c * (A @ xi @ B.T - C @ xi @ D.T)

    def apply_block_adjoint(self, alpha: int, k: int, eta: np.ndarray) -> np.ndarray:
        c, A, B, C, D = self.block_factors(alpha, k)
        return c * (A.T @ eta @ B - C.T @ eta @ D)

    def overlap_matrix(self, k: int) -> np.ndarray:
        """W = phiL* sigma phiR on block k (the flip-overlap matrix)."""
        phiL = self.phi_hat(1, "L", k)
        phiR = self.phi_hat(1, "R", k)
        return phiL.T @ self.flip_left(1, k, phiR)

    def band_overlap(self, alpha: int, k: int) -> np.ndarray:
        """V = phiL* sigma phiR for one band; the gram of the block is
        c^2 (2 I - N) with N xi = V xi V + V^t xi V^t."""
        phiL = self.phi_hat(alpha, "L", k)
        phiR = self.phi_hat(alpha, "R", k)
        return phiL.T @ self.flip_left(alpha, k, phiR)

    def _n_extremes(self, v: np.ndarray, want_max: bool) -> float:
        """Extreme eigenvalue of xi -> V xi V + V^t xi V^t."""
        d = v.shape[0]
        if d <= 64:
            nmat = np.kron(v, v.T) + np.kron(v.T, v)
            w = np.linalg.eigvalsh(0.5 * (nmat + nmat.T))
            return float(w[-1] if want_max else w[0])

        def shifted(xi):
            s = v @ xi @ v + v.T @ xi @ v.T
            return s + 2.0 * xi if want_max else 2.0 * xi - s

        lam = _power_hermitian(shifted, d) - 2.0
        return lam if want_max else -lam

    def block_norm(self, alpha: int, k: int) -> float:
        c = self.block_factors(alpha, k)[0]
        v = self.band_overlap(alpha, k)
        lam_min = self._n_extremes(v, want_max=False)
        return c * math.sqrt(max(2.0 - lam_min, 0.0))

    def block_min_singular(self, k: int) -> float:
        """Smallest singular value of the upward block."""
        c = self.block_factors(1, k)[0]
        lam_max = self._n_extremes(self.overlap_matrix(k), want_max=True)
        return c * math.sqrt(max(2.0 - lam_max, 0.0))


def _power_hermitian(apply_fn, d: int, tol: float = 1e-11,
                     max_iter: int = 3_000) -> float:
    """Largest eigenvalue of a PSD operator on d x d matrices."""
    rng = np.random.default_rng(987)
    xi = rng.standard_normal((d, d))
    xi /= np.linalg.norm(xi)
    lam = 0.0
    for _ in range(max_iter):
        w = apply_fn(xi)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        lam_new = float(np.tensordot(xi, w))
        xi = w / nw
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300):
            return lam_new
        lam = lam_new
    return lam


# ---------------------------------------------------------------------------
# Block vectors over a truncated family of blocks


@dataclass
class BlockVector:
    """Vector in the direct sum of the (H_k x H_k)-blocks, k in a range."""
    parts: dict = field(default_factory=dict)

    def norm(self) -> float:
        return math.sqrt(sum(float(np.tensordot(v, v)) for v in self.parts.values()))

    def scaled(self, c: float) -> "BlockVector":
        return BlockVector({k: c * v for k, v in self.parts.items()})


def apply_T(model: BlockModel, src: BlockVector, alphas=(1, 0, -1)) -> dict:
    """Target components indexed by target block; sums the three bands.
    Targets beyond the truncation level are dropped."""
    out: dict = {}
    for k, xi in src.parts.items():
        if k == 0:
            continue  # the vacuum is annihilated by construction
        for a in alphas:
            j = k + a
            if j < 0 or j > model.K or j > model.top:
                continue
            eta = model.apply_block(a, k, xi)
            if j in out:
                out[j] = out[j] + eta
            else:
                out[j] = eta
    return out


def apply_T_adjoint(model: BlockModel, tgt: dict, kmin: int, kmax: int,
                    alphas=(1, 0, -1)) -> BlockVector:
    parts: dict = {}
    for j, eta in tgt.items():
        for a in alphas:
            k = j - a
            if k < max(kmin, 1) or k > kmax:
                continue
            xi = model.apply_block_adjoint(a, k, eta)
            parts[k] = parts.get(k, 0) + xi if k in parts else xi
    return BlockVector(parts)


def combined_lower_band_norm(model: BlockModel, kmax: int,
                             tol: float = 1e-12) -> float:
    """Norm of the 0 and -1 bands together over blocks 1..kmax."""

    def gram(v: BlockVector) -> BlockVector:
        tgt = apply_T(model, v, alphas=(0, -1))
        return apply_T_adjoint(model, tgt, 1, kmax, alphas=(0, -1))

    lam = _power_block(gram, model, 1, kmax, tol)
    return math.sqrt(max(lam, 0.0))


def contraction_map(model: BlockModel, v: BlockVector) -> BlockVector:
    """(id - T*T / (2 [3])) on the truncated block family."""
    three = qn(model.q, 3)
    tgt = apply_T(model, v)
    tv = apply_T_adjoint(model, tgt, 0, model.K)
    out = {}
    for k, xi in v.parts.items():
        out[k] = xi - tv.parts[k] / (2.0 * three) if k in tv.parts else xi.copy()
    for k, xi in tv.parts.items():
        if k not in out:
            out[k] = -xi / (2.0 * three)
    return BlockVector(out)


def _band_terms(model: BlockModel, alpha: int, k: int):
    """T^(alpha)_k xi = sum of sign*c * (A xi B^t) over the two terms."""
    c, A, B, C, D = model.block_factors(alpha, k)
    return [(c, A, B), (-c, C, D)]


def _ntt_terms(model: BlockModel, m: int, k: int):
    """(T*T xi)_m = sum sign * (X xi Y^t) for xi on block k, as small
    factor pairs; targets above the truncation level are dropped."""
    out = []
    if m == 0 or k == 0:
        return out
    for a in (1, 0, -1):
        j = m + a
        b = j - k
        if j < 1 or j > model.K or j > model.top or b not in (1, 0, -1):
            continue
        for sa, Xa, Ya in _band_terms(model, a, m):
            for sb, Xb, Yb in _band_terms(model, b, k):
                out.append((sa * sb, Xa.T @ Xb, Ya.T @ Yb))
    return out


def _form_block(terms_left, terms_right) -> np.ndarray:
    """Gram block  sum_{t,s} s_t s_s kron(X_t^T X_s, (Y_s^T Y_t)^T)  of two
    factor-pair expansions, for row-major matrix vectorisation."""
    out = None
    for st, Xt, Yt in terms_left:
        for ss, Xs, Ys in terms_right:
            blk = (st * ss) * np.kron(Xt.T @ Xs, (Ys.T @ Yt).T)
            out = blk if out is None else out + blk
    return out


def interior_contraction_norm(model: BlockModel) -> float:
    """Norm of (id - T*T / (2 [3])) compressed to the interior blocks
    1..K-1, via an exact Gram assembly out of small matrix products.

    With N = T*T,  <Phi xi, Phi eta> = <xi,eta> - <T xi,T eta>/[3]
    + <N xi, N eta>/(4 [3]^2); every pairing reduces to traces of products
    of the compressed intertwiners, so the Gram never touches a large
    target space and the top eigenvalue comes from a dense solver.
    """
    three = qn(model.q, 3)
    kint = list(range(1, model.K))
    sizes = [model.dims(k) ** 2 for k in kint]
    offs = np.concatenate(([0], np.cumsum(sizes)))
    total = int(offs[-1])
    gram = np.eye(total)
    for bi, k in enumerate(kint):
        for bj, k2 in enumerate(kint):
            blk = np.zeros((sizes[bi], sizes[bj]))
            # <T xi, T eta> over common targets
            for j in range(0, model.K + 1):
                a, b = j - k, j - k2
                if a not in (1, 0, -1) or b not in (1, 0, -1) or j > model.top:
                    continue
                blk += _form_block(_band_terms(model, a, k),
                                   _band_terms(model, b, k2))
            blk2 = np.zeros_like(blk)
            # <N xi, N eta> over common middle blocks
            for m in range(1, model.K + 1):
                lt = _ntt_terms(model, m, k)
                ls = _ntt_terms(model, m, k2)
                if lt and ls:
                    blk2 += _form_block(lt, ls)
            gram[offs[bi]:offs[bi + 1], offs[bj]:offs[bj + 1]] += (
                -blk / three + blk2 / (4.0 * three * three))
    lam = float(np.linalg.eigvalsh(gram)[-1])
    return math.sqrt(max(lam, 0.0))


def _power_block(gram, model: BlockModel, kmin: int, kmax: int,
                 tol: float, max_iter: int = 3_000) -> float:
    rng = np.random.default_rng(55221)
    v = BlockVector({k: rng.standard_normal((model.dims(k), model.dims(k)))
                     for k in range(kmin, kmax + 1)})
    nv = v.norm()
    v = v.scaled(1.0 / nv)
    lam = 0.0
    for _ in range(max_iter):
        w = gram(v)
        nw = w.norm()
        if nw == 0:
            return 0.0
        lam_new = sum(float(np.tensordot(v.parts[k], w.parts[k]))
                      for k in v.parts if k in w.parts)
        v = w.scaled(1.0 / nw)
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300):
            return lam_new
        lam = lam_new
    return lam


# ---------------------------------------------------------------------------
# Flip overlap: value, bound and exact three-term expansion


def rotate_first_to_last(maps: cc.StructureMaps, factors: int) -> np.ndarray:
    n = maps.dim
    dim = n ** factors
    idx = np.arange(dim).reshape(n, n ** (factors - 1))
    perm = idx.reshape(n, -1).transpose(1, 0).reshape(-1)
    out = np.zeros((dim, dim))
    out[np.arange(dim), perm] = 1.0
    return out


def flip_overlap_bound(q: float, k: int) -> float:
    """Closed-form bound for the flip overlap on block k."""
    num = (qn(q, 2 * k + 1)
           + qn(q, 2) ** 2 * (1.0 + qn(q, 2 * k) / qn(q, 2 * k + 2))
           + qn(q, 2) / qn(q, 2 * k + 2))
    return num / qn(q, 2 * k + 3)


def overlap_expansion_matrix(model: BlockModel, k: int) -> np.ndarray:
    """The three-term expansion of the flip overlap, compressed to block k:

        [2k+1]/[2k+3] * (rot)  -  (1 + [2k]/[2k+2])/[2k+3] * (m rot' m*)
        + [2]/([2k+3][2k+2]) * (rot*),

    with rotations moving the first tensor factor to the back and vice
    versa.  Needs ambient dimension (dim B)^(k+1)."""
    maps = model.maps
    tw = model.tower
    n = maps.dim
    q = model.q
    qk = tw.Q[k]
    rot_fl = rotate_first_to_last(maps, k)
    s1 = qk.T @ (rot_fl @ qk)
    s3 = qk.T @ (rot_fl.T @ qk)
    # middle term: expand the first factor, compress its first leg to the
    # unit-free part (the flip lives between the standard subspaces, and
    # this leg is not in one automatically), rotate it to the back, close it
    maps.check_budget(k + 1)
    y = maps.mstar @ qk.reshape(n, -1)       # n^2 x (n^(k-1) dk)
    y = y.reshape(n, -1)
    y = y - np.outer(maps.nu, maps.nu @ y)
    y = y.reshape(n ** (k + 1), tw.dims[k])
    y = rotate_first_to_last(maps, k + 1) @ y
    y = y.reshape(n ** (k - 1), n * n, tw.dims[k])
    y = np.einsum("pq,aqj->apj", maps.mmat, y, optimize=True)
    s2 = qk.T @ y.reshape(n ** k, tw.dims[k])
    c1 = qn(q, 2 * k + 1) / qn(q, 2 * k + 3)
    c2 = (1.0 + qn(q, 2 * k) / qn(q, 2 * k + 2)) / qn(q, 2 * k + 3)
    c3 = qn(q, 2) / (qn(q, 2 * k + 3) * qn(q, 2 * k + 2))
    return c1 * s1 - c2 * s2 + c3 * s3


def flip_overlap(model: BlockModel, k: int, route: str = "expansion") -> float:
    """Norm of the flip-overlap matrix on block k.

    route 'phi' computes phiL* sigma phiR directly (needs the k+1 tower
    level); route 'expansion' goes through the three-term expansion, which
    stays inside (dim B)^(k+1) and is certified against the phi route
    wherever both fit the budget."""
    if route == "phi":
        w = model.overlap_matrix(k)
    else:
        w = overlap_expansion_matrix(model, k)
    return float(np.linalg.svd(w, compute_uv=False)[0]) if w.size else 0.0


def overlap_expansion_residual(model: BlockModel, k: int) -> float:
    """Largest deviation between the phi route and the expansion route."""
    return float(np.abs(model.overlap_matrix(k)
                        - overlap_expansion_matrix(model, k)).max())


# ---------------------------------------------------------------------------
# Closed-form constants of the lower-bound chain


def lower_bound_constants(delta: float) -> dict:
    """C(q), f(delta) and the equivalent g(q), as printed.

    When C(q) < 0 the square root is imaginary; f is then reported with the
    real part of the root (zero) and flagged, never raised.
    """
    q = q_from_delta(delta).q
    two, three, four, five = (qn(q, a) for a in (2, 3, 4, 5))
    Cq = 2.0 * (q ** -2 - q ** 2
                - two ** 4 * (1 + q * q) ** 2 / (three * five)
                - two ** 2 / (four ** 2 * three * five)
                - 2.0 * two ** 2 * (1 + q * q) / five
                - 2.0 * two / (four * five)
                - 2.0 * two ** 3 * (1 + q * q) / (four * three * five))
    complex_invalid = Cq < 0
    root = math.sqrt(Cq) if Cq >= 0 else 0.0
    f = (root - 2.0 * (1.0 + q)) / math.sqrt(three)
    inner = (q ** -2 / three - q ** 2 / three
             - two ** 4 * (1 + q * q) ** 2 / (three ** 2 * five)
             - two ** 2 / (four ** 2 * three ** 2 * five)
             - 2.0 * two ** 2 * (1 + q * q) / (three * five)
             - 2.0 * two / (three * four * five)
             - 2.0 * two ** 3 * (1 + q * q) / (four * three ** 2 * five))
    g = (math.sqrt(2.0) * math.sqrt(inner) if inner >= 0 else 0.0) \
        - 2.0 * (1.0 + q) / math.sqrt(three)
    return {"q": q, "Cq": Cq, "f": f, "g": g, "complex_invalid": complex_invalid}


def phase_identity_exact(k: int) -> bool:
    """[2k]/[2k+2] ([2][2k+1]/[2k] - 1) == 1 in the rational function field."""
    lhs = (q_integer(2 * k) / q_integer(2 * k + 2)) * (
        q_integer(2) * q_integer(2 * k + 1) / q_integer(2 * k) - QRAT_ONE)
    return lhs == QRAT_ONE


# ---------------------------------------------------------------------------
# The twelve auxiliary identities behind the block formulas


def _sqrt_qprod(a: int, num: bool = True) -> QProd:
    return QProd.qint(a) if num else QProd.qint(a, -1)


def a1_identity(alpha: int, k: int) -> bool:
    """[3]^(1/2) (1_2 x phi^(-alpha)_{k+alpha,L}*) (t_2 x 1_2k)
       == prefactor(alpha) phi^(alpha)_{k,L}, exactly."""
    phi_up = el.phi_morphism(-alpha, "L", k + alpha)
    t2 = el.nested_cup_morphism(2)
    lhs = el.element_mult(
        el.element_tensor(el.identity_element(2), el.element_adjoint(phi_up)),
        el.element_tensor(t2, el.identity_element(2 * k)))
    lhs = el.element_sqrt_scale(lhs, QProd.qint(3))
    rhs = el.phi_morphism(alpha, "L", k)
    if alpha == 1:
        rhs = el.element_sqrt_scale(rhs, QProd.qint(2 * k + 3) * QProd.qint(2 * k + 1, -1))
    elif alpha == -1:
        rhs = el.element_sqrt_scale(rhs, QProd.qint(2 * k - 1) * QProd.qint(2 * k + 1, -1))
    return el.element_equal(el.element_normalize(lhs), el.element_normalize(rhs))


def a2_identity(alpha: int, k: int) -> bool:
    """(1_{2k+2a} x phi^(-alpha)_{k+alpha,L}) t_{2k+2a}
       == (phi^(alpha)_{k,R} x 1_2k) t_2k, exactly (the slot-free form)."""
    phi_up = el.phi_morphism(-alpha, "L", k + alpha)
    lhs = el.element_mult(
        el.element_tensor(el.identity_element(2 * k + 2 * alpha), phi_up),
        el.nested_cup_morphism(2 * k + 2 * alpha))
    rhs = el.element_mult(
        el.element_tensor(el.phi_morphism(alpha, "R", k), el.identity_element(2 * k)),
        el.nested_cup_morphism(2 * k))
    return el.element_equal(el.element_normalize(lhs), el.element_normalize(rhs))


def b1_identity(model: BlockModel, k: int, alpha: int, tol: float = 1e-9) -> float:
    """Largest deviation in the flip-side analogue of a1 on represented
    matrices; returns the residual."""
    maps = model.maps
    n = maps.dim
    tw = model.tower
    qk = tw.Q[k]
    phi_up = el.phi_morphism(-alpha, "R", k + alpha)
    t2vec = cc.t2_hat(maps)
    # ((phi_up)* x 1_2) (xi x t2), then the block flip, scaled by [3]^(1/2)
    batch = qk.shape[1]
    v = np.einsum("xj,y->xyj", qk, t2vec, optimize=True)
    v = v.reshape(n ** (k + 1), n * batch)
    w = cc.apply_element(el.element_adjoint(phi_up), maps, v)
    w = w.reshape(n ** (k + alpha), n, batch).reshape(n ** (k + alpha) * n, batch)
    flip = cc.block_flip(maps, k + alpha, 1)
    lhs = math.sqrt(qn(model.q, 3)) * (flip @ w)
    phi_r = el.phi_morphism(alpha, "R", k)
    rhs = cc.apply_element(phi_r, maps, qk)
    rhs = cc.block_flip(maps, k + alpha, 1) @ rhs
    if alpha == 1:
        pref = math.sqrt(qn(model.q, 2 * k + 3) / qn(model.q, 2 * k + 1))
    elif alpha == -1:
        pref = math.sqrt(qn(model.q, 2 * k - 1) / qn(model.q, 2 * k + 1))
    else:
        pref = 1.0
    return float(np.abs(lhs - pref * rhs).max())


def b2_identity(model: BlockModel, k: int, alpha: int, n_slices: int = 3,
                seed: int = 4242) -> float:
    """Largest deviation in the flip-side analogue of a2 on random slices."""
    maps = model.maps
    n = maps.dim
    tw = model.tower
    rng = np.random.default_rng(seed)
    t_up = cc.t2k_hat(maps, k + alpha)
    t_k = cc.t2k_hat(maps, k)
    phi_up = el.phi_morphism(-alpha, "R", k + alpha)
    phi_l = el.phi_morphism(alpha, "L", k)
    worst = 0.0
    for _ in range(n_slices):
        eta = tw.Q[k] @ rng.standard_normal(tw.dims[k])
        # lhs: (1 x eta* x 1_2) (1 x phi_up) t_{2k+2alpha}
        m = t_up.reshape(n ** (k + alpha), n ** (k + alpha))
        w = cc.apply_element(phi_up, maps, m.T)   # maps the second slot
        # w columns: second-slot image in B^k x B; rows indexed by first slot
        w = w.reshape(n ** k, n, n ** (k + alpha))
        lhs = np.einsum("x,xym->my", eta, w, optimize=True).reshape(-1)
        # rhs: sigma* phi_l ((1 x eta*) t_2k)
        mk = t_k.reshape(n ** k, n ** k)
        vec = mk @ eta
        r = cc.apply_element(phi_l, maps, vec.reshape(-1, 1))[:, 0]
        r = cc.block_flip(maps, k + alpha, 1).T @ r
        worst = max(worst, float(np.abs(lhs - r).max()))
    return worst


def appendix_suite(model: BlockModel, kmax: int = 3) -> list[dict]:
    """All twelve identities for k = 1..kmax; exact where flip-free."""
    rows = []
    for k in range(1, kmax + 1):
        for alpha in (1, 0, -1):
            rows.append({"check": f"a1[{alpha:+d}] k={k}", "kind": "exact",
                         "ok": a1_identity(alpha, k)})
            rows.append({"check": f"a2[{alpha:+d}] k={k}", "kind": "exact",
                         "ok": a2_identity(alpha, k)})
            r1 = b1_identity(model, k, alpha)
            rows.append({"check": f"b1[{alpha:+d}] k={k}", "kind": "matrix",
                         "residual": r1, "ok": r1 <= 1e-9})
            r2 = b2_identity(model, k, alpha)
            rows.append({"check": f"b2[{alpha:+d}] k={k}", "kind": "matrix",
                         "residual": r2, "ok": r2 <= 1e-9})
        rows.append({"check": f"phase z=1 k={k}", "kind": "exact",
                     "ok": phase_identity_exact(k)})
    return rows
