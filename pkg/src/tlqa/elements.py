"""Linear algebra over the diagram basis.

A ``TLElement`` is a finite sum of diagrams with exact coefficients.  The
coefficient of one diagram is

    scale * sqrt(rad) * n(q)

where ``n`` is an integer Laurent polynomial private to the diagram,
``scale`` is a factored monomial in the q-integers shared by the whole
element, and ``rad`` is a formal radicand (kept squarefree in factored form;
square parts are folded into ``scale`` on construction).  Every prefactor
appearing in the morphism constructions is a monomial in q-integers, so this
shape is closed under all the operations used here, and identity checking
never needs floating point: two elements are compared by cross-multiplying
scales (or squared normal forms when the radicands differ).

Products run through the batched strand-tracing kernel; the resulting rows
are grouped with numpy before any exact coefficient work happens, so the
number of big-integer polynomial operations is proportional to the number of
distinct (diagram, loop count, coefficient pair) classes, not to the number
of diagram pairs.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .diagrams import (GradingError, TLDiagram, adjoint_partner, cap_cup,
                       cup_nest, cup, cap, has_adjacent_top_pair,
                       identity_diagram, tensor_partner)
from .kernels import compose_batch, group_rows
from .qarith import (FusionError, L_ONE, L_ZERO, Lint, QProd, QRat,
                     admissible_r, coupling_qprod, delta_pow_lint, l_add,
                     l_content, l_divexact, l_eval, l_mul, l_neg, l_scale,
                     q_int_lint)


class ResourceError(RuntimeError):
    """A product or expansion exceeds the configured size budget."""


# Pairs of basis diagrams traced per single product call before refusing.
PAIR_BUDGET = 60_000_000
# Rows composed per kernel chunk (memory control).
_CHUNK = 400_000


class TLElement:
    __slots__ = ("bottom", "top", "terms", "scale", "rad", "_arrays")

    def __init__(self, bottom: int, top: int, terms: dict, scale: QProd, rad: QProd):
        self.bottom = bottom
        self.top = top
        self.terms = terms
        self.scale = scale
        self.rad = rad
        self._arrays = None

    def is_zero(self) -> bool:
        return not self.terms

    def n_terms(self) -> int:
        return len(self.terms)

    def support(self):
        return [TLDiagram(self.bottom, self.top, k) for k in sorted(self.terms)]

    def term_arrays(self):
        if self._arrays is None:
            keys = sorted(self.terms)
            arr = np.array(keys, dtype=np.int64).reshape(len(keys), self.bottom + self.top)
            lints = [self.terms[k] for k in keys]
            self._arrays = (arr, lints)
        return self._arrays

    def coefficient(self, partner: tuple) -> tuple[QProd, QProd, Lint]:
        """(scale, rad, poly) triple for one diagram; poly is 0 if absent."""
        return self.scale, self.rad, self.terms.get(tuple(partner), L_ZERO)

    def evalf(self, q: float) -> dict:
        """Numeric coefficients at q; radicand must be nonnegative there."""
        r = self.rad.evalf(q)
        if r < 0:
            raise ValueError("radicand evaluates negative")
        s = self.scale.evalf(q) * math.sqrt(r)
        return {k: s * float(l_eval(n, q)) for k, n in self.terms.items()}

    def serialize(self) -> list:
        out = []
        for k in sorted(self.terms):
            n = self.terms[k]
            coeff = f"({self.scale})*sqrt({self.rad})*({n!r})"
            out.append([list(k), coeff])
        return out

    def __repr__(self):
        return (f"TLElement({self.bottom}->{self.top}, {len(self.terms)} terms, "
                f"scale={self.scale}, rad={self.rad})")


def _element(bottom: int, top: int, terms: dict, scale: QProd, rad: QProd) -> TLElement:
    terms = {k: v for k, v in terms.items() if v.coeffs}
    if not terms:
        return TLElement(bottom, top, {}, QProd.one(), QProd.one())
    if not rad.is_one():
        root, rad = rad.sqrt_split()
        scale = scale * root
    return TLElement(bottom, top, terms, scale, rad)


def zero_element(bottom: int, top: int) -> TLElement:
    return TLElement(bottom, top, {}, QProd.one(), QProd.one())


def from_diagram(d: TLDiagram, scale: QProd = None, rad: QProd = None) -> TLElement:
    return _element(d.bottom, d.top, {d.partner: L_ONE},
                    scale or QProd.one(), rad or QProd.one())


def identity_element(n: int) -> TLElement:
    return from_diagram(identity_diagram(n))


def cap_cup_element(n: int, i: int) -> TLElement:
    """Bare adjacent cap-cup; squares to delta times itself."""
    return from_diagram(cap_cup(n, i))


def generator_t(k: int, l: int) -> TLElement:
    """Scaled single-arc generator: delta^(-1/2) times k strands, an arc,
    then l strands, as a map k+l -> k+l+2."""
    n = k + l
    # boundary: bottom 0..n-1; top n..2n+1 with the arc at slots k, k+1
    partner = [0] * (2 * n + 2)
    for i in range(k):
        partner[i] = n + i
        partner[n + i] = i
    a, b = n + k, n + k + 1
    partner[a], partner[b] = b, a
    for i in range(k, n):
        partner[i] = n + i + 2
        partner[n + i + 2] = i
    return _element(n, n + 2, {tuple(partner): L_ONE}, QProd.one(), QProd.qint(2, -1))


# ---------------------------------------------------------------------------
# Scalar plumbing


def _qprod_common(ps: list[QProd]) -> QProd:
    gnum = 0
    glden = 1
    for p in ps:
        c = abs(p.content)
        gnum = math.gcd(gnum, c.numerator)
        glden = glden * c.denominator // math.gcd(glden, c.denominator)
    content = Fraction(gnum, glden)
    shift = min(p.shift for p in ps)
    letters = set()
    for p in ps:
        letters.update(a for a, _ in p.factors)
    factors = []
    for a in sorted(letters):
        e = min(dict(p.factors).get(a, 0) for p in ps)
        if e:
            factors.append((a, e))
    return QProd(content, shift, tuple(factors))


def _qprod_to_lint(p: QProd) -> Lint:
    """Expansion of a monomial with integer content and exponents >= 0."""
    if p.content.denominator != 1:
        raise ValueError("expansion needs an integer content")
    out = Lint(p.shift, (p.content.numerator,))
    for a, e in p.factors:
        if e < 0:
            raise ValueError("expansion needs nonnegative exponents")
        for _ in range(e):
            out = l_mul(out, q_int_lint(a))
    return out


def _qprod_num_den_lints(p: QProd) -> tuple[Lint, Lint]:
    """p = num/den with both sides expanded monomials (integer contents)."""
    c = p.content
    num = QProd(Fraction(c.numerator), max(p.shift, 0),
                tuple((a, e) for a, e in p.factors if e > 0))
    den = QProd(Fraction(c.denominator), max(-p.shift, 0),
                tuple((a, -e) for a, e in p.factors if e < 0))
    return _qprod_to_lint(num), _qprod_to_lint(den)


_SIGN_PROBES = [Fraction(1), Fraction(1, 2), Fraction(1, 3), Fraction(2, 3),
                Fraction(1, 5), Fraction(2, 5), Fraction(3, 7), Fraction(1, 7),
                Fraction(5, 11), Fraction(7, 13)]


def _lint_sign_pair(a: Lint, b: Lint) -> bool:
    """True when a and b have the same sign at a common regular point."""
    for q in _SIGN_PROBES:
        va = l_eval(a, q)
        vb = l_eval(b, q)
        if va and vb:
            return (va > 0) == (vb > 0)
        if (va == 0) != (vb == 0):
            return False
    raise ArithmeticError("sign probe exhausted; polynomials vanish at all probes")


# ---------------------------------------------------------------------------
# Element operations


def element_scale(x: TLElement, s: QProd) -> TLElement:
    if x.is_zero() or s.content == 0:
        return zero_element(x.bottom, x.top)
    return _element(x.bottom, x.top, dict(x.terms), x.scale * s, x.rad)


def element_sqrt_scale(x: TLElement, r: QProd) -> TLElement:
    """Multiply by the formal square root of r."""
    if x.is_zero():
        return x
    return _element(x.bottom, x.top, dict(x.terms), x.scale, x.rad * r)


def element_neg(x: TLElement) -> TLElement:
    return element_scale(x, QProd.from_fraction(-1))


def element_sum(pieces: list[tuple[QProd, TLElement]]) -> TLElement:
    """sum of mult_i * x_i in one merge pass.

    All nonzero pieces must share grading and radicand; their scales are
    pulled down to a common monomial so each piece contributes through an
    integer-polynomial multiplier.
    """
    live = [(m, x) for m, x in pieces if not x.is_zero() and m.content != 0]
    if not live:
        x0 = pieces[0][1]
        return zero_element(x0.bottom, x0.top)
    b, t = live[0][1].bottom, live[0][1].top
    rad = live[0][1].rad
    for _, x in live:
        if (x.bottom, x.top) != (b, t):
            raise GradingError("summands live in different graded pieces")
        if x.rad != rad:
            raise ValueError("summands carry different radicands")
    totals = [m * x.scale for m, x in live]
    common = _qprod_common(totals)
    mults = [_qprod_to_lint(tot / common) for tot in totals]
    total_terms = sum(len(x.terms) for _, x in live)
    if total_terms > 50_000:
        acc = _sum_vector(live, mults)
    else:
        acc: dict = {}
        for (_, x), mlint in zip(live, mults):
            for key, n in x.terms.items():
                c = l_mul(n, mlint)
                prev = acc.get(key)
                acc[key] = c if prev is None else l_add(prev, c)
    return _element(b, t, acc, common, rad)


def _sum_vector(live, mults) -> dict:
    """Merge pass over an int64 coefficient window; falls back to object
    arithmetic when the exact height bound does not fit."""
    scaled_banks = []
    height = 0
    lo_w, hi_w = 10**9, -10**9
    for (_, x), mlint in zip(live, mults):
        bank, col = _coeff_bank(list(x.terms.values()))
        sbank = [l_mul(n, mlint) for n in bank]
        for n in sbank:
            if n.coeffs:
                lo_w = min(lo_w, n.shift)
                hi_w = max(hi_w, n.shift + len(n.coeffs))
                height += _l1(n) * len(x.terms)
        scaled_banks.append((x, sbank, col))
    if height >= 2**62:
        acc: dict = {}
        for x, sbank, col in scaled_banks:
            for (key, _), ci in zip(x.terms.items(), col):
                c = sbank[ci]
                prev = acc.get(key)
                acc[key] = c if prev is None else l_add(prev, c)
        return acc
    W = hi_w - lo_w
    index: dict = {}
    rows = []
    for x, sbank, col in scaled_banks:
        for (key, _), ci in zip(x.terms.items(), col):
            j = index.get(key)
            if j is None:
                j = len(index)
                index[key] = j
            rows.append((j, ci))
    import scipy.sparse as sp

    R = np.zeros((len(index), W), dtype=np.int64)
    pos = 0
    for x, sbank, col in scaled_banks:
        npiece = len(x.terms)
        jarr = np.fromiter((r[0] for r in rows[pos:pos + npiece]),
                           dtype=np.int64, count=npiece)
        P = np.zeros((len(sbank), W), dtype=np.int64)
        for i, n in enumerate(sbank):
            if n.coeffs:
                off = n.shift - lo_w
                P[i, off:off + len(n.coeffs)] = n.coeffs
        C = sp.csr_matrix((np.ones(npiece, dtype=np.int64), (jarr, col)),
                          shape=(len(index), len(sbank)), dtype=np.int64)
        R += np.asarray(C.dot(P))
        pos += npiece
    return _rows_to_terms(list(index), R, lo_w)


def _rows_to_terms(keys: list, R: np.ndarray, lo_w: int) -> dict:
    terms: dict = {}
    nz_any = np.nonzero(np.any(R, axis=1))[0]
    for i in nz_any:
        row = R[i]
        nz = np.nonzero(row)[0]
        a, b = int(nz[0]), int(nz[-1]) + 1
        terms[keys[i]] = Lint(lo_w + a, tuple(row[a:b].tolist()))
    return terms


def element_add(x: TLElement, y: TLElement) -> TLElement:
    return element_sum([(QProd.one(), x), (QProd.one(), y)])


def element_sub(x: TLElement, y: TLElement) -> TLElement:
    return element_sum([(QProd.one(), x), (QProd.from_fraction(-1), y)])


def element_adjoint(x: TLElement) -> TLElement:
    terms = {adjoint_partner(k, x.bottom, x.top): n for k, n in x.terms.items()}
    return _element(x.top, x.bottom, terms, x.scale, x.rad)


def element_tensor(x: TLElement, y: TLElement) -> TLElement:
    if x.is_zero() or y.is_zero():
        return zero_element(x.bottom + y.bottom, x.top + y.top)
    if len(x.terms) * len(y.terms) > PAIR_BUDGET:
        raise ResourceError("tensor product exceeds the pair budget")
    terms: dict = {}
    for ka, na in x.terms.items():
        for kb, nb in y.terms.items():
            key = tensor_partner(ka, x.bottom, x.top, kb, y.bottom, y.top)
            terms[key] = l_mul(na, nb)
    return _element(x.bottom + y.bottom, x.top + y.top, terms,
                    x.scale * y.scale, x.rad * y.rad)


def _coeff_bank(lints) -> tuple[list, np.ndarray]:
    bank: list[Lint] = []
    idx: dict = {}
    col = np.empty(len(lints), dtype=np.int64)
    for i, lint in enumerate(lints):
        j = idx.get(id(lint))
        if j is None:
            j = len(bank)
            bank.append(lint)
            idx[id(lint)] = j
        col[i] = j
    return bank, col


_L1_MEMO: dict = {}


def _l1(lint: Lint) -> int:
    v = _L1_MEMO.get(id(lint))
    if v is None:
        v = sum(abs(c) for c in lint.coeffs)
        _L1_MEMO[id(lint)] = v
    return v


def element_mult(x: TLElement, y: TLElement) -> TLElement:
    """Stack x over y, tracing strands and weighting removed loops by [2].

    The all-pairs trace runs in the compiled kernel; rows are then grouped so
    exact work scales with the number of distinct (diagram, loops,
    coefficient-pair) classes.  When an a-priori height bound certifies that
    no intermediate exceeds int64, the coefficient accumulation itself runs
    as vectorised integer convolution; otherwise it falls back to
    big-integer polynomials.  Both paths are exact.
    """
    if x.bottom != y.top:
        raise GradingError(f"cannot glue {x.bottom} onto {y.top}")
    bout, tout = y.bottom, x.top
    if x.is_zero() or y.is_zero():
        return zero_element(bout, tout)
    n1, n2 = len(x.terms), len(y.terms)
    if n1 * n2 > PAIR_BUDGET:
        raise ResourceError(f"{n1} x {n2} diagram pairs exceed the budget")
    X, xl = x.term_arrays()
    Y, yl = y.term_arrays()
    xbank, xcol = _coeff_bank(xl)
    ybank, ycol = _coeff_bank(yl)
    klen = bout + tout
    max_loops = x.bottom
    height = (max(map(_l1, xbank)) * max(map(_l1, ybank))
              * 2**max_loops * n1 * n2)
    scale = x.scale * y.scale
    rad = x.rad * y.rad
    chunks = []
    step = max(1, _CHUNK // max(n2, 1))
    for lo in range(0, n1, step):
        hi = min(n1, lo + step)
        res, loops = compose_batch(X[lo:hi], x.bottom, x.top, Y, y.bottom, y.top)
        nch = hi - lo
        rows = np.empty((nch * n2, klen + 3), dtype=np.int64)
        rows[:, :klen] = res
        rows[:, klen + 1] = loops
        rows[:, klen + 2] = np.repeat(xcol[lo:hi], n2)
        rows[:, klen] = np.tile(ycol, nch)
        uq, cnt = group_rows(rows)
        chunks.append((uq, cnt))
    if len(chunks) == 1:
        uq, cnt = chunks[0]
    else:
        allrows = np.vstack([u for u, _ in chunks])
        allcnt = np.concatenate([c for _, c in chunks])
        order = np.lexsort(allrows.T[::-1])
        sr, sc = allrows[order], allcnt[order]
        diff = np.any(sr[1:] != sr[:-1], axis=1)
        starts = np.concatenate(([0], np.nonzero(diff)[0] + 1))
        uq = sr[starts]
        cnt = np.add.reduceat(sc, starts)
    heavy = uq.shape[0] > 30_000
    if heavy and height < 2**62:
        terms = _accumulate_vector(uq, cnt, klen, xbank, ybank)
    else:
        terms = _accumulate_object(uq, cnt, klen, xbank, ybank)
    return _element(bout, tout, terms, scale, rad)


def _accumulate_object(uq, cnt, klen, xbank, ybank) -> dict:
    acc: dict = {}
    pair_memo: dict = {}
    keys = [tuple(r) for r in uq[:, :klen].tolist()]
    meta = uq[:, klen:].tolist()
    for key, (cj, lp, ci), c in zip(keys, meta, cnt.tolist()):
        mk = (ci, cj, lp)
        co = pair_memo.get(mk)
        if co is None:
            co = l_mul(xbank[ci], ybank[cj])
            if lp:
                co = l_mul(co, delta_pow_lint(lp))
            pair_memo[mk] = co
        if c > 1:
            co = l_scale(co, c)
        prev = acc.get(key)
        acc[key] = co if prev is None else l_add(prev, co)
    return acc


def _accumulate_vector(uq, cnt, klen, xbank, ybank) -> dict:
    """Grouped exact accumulation in an int64 coefficient window."""
    import scipy.sparse as sp

    nrows = uq.shape[0]
    # distinct result keys: uq is lexsorted with the key columns leading
    if klen:
        keydiff = np.any(uq[1:, :klen] != uq[:-1, :klen], axis=1)
        keystarts = np.concatenate(([0], np.nonzero(keydiff)[0] + 1))
    else:
        keystarts = np.array([0])
    key_of_row = np.zeros(nrows, dtype=np.int64)
    key_of_row[keystarts] = 1
    key_of_row = np.cumsum(key_of_row) - 1
    keys = uq[keystarts, :klen]
    nkeys = keys.shape[0]
    ycol = uq[:, klen]
    loops = uq[:, klen + 1]
    xcolr = uq[:, klen + 2]
    # distinct (ci, cj) pairs
    pair_code = xcolr * len(ybank) + ycol
    upairs, pair_idx = np.unique(pair_code, return_inverse=True)
    ax = [np.array(l.coeffs, dtype=np.int64) for l in xbank]
    ay = [np.array(l.coeffs, dtype=np.int64) for l in ybank]
    sx = [l.shift for l in xbank]
    sy = [l.shift for l in ybank]
    maxloop = int(loops.max()) if nrows else 0
    lo_w = min(sx) + min(sy) - maxloop
    hi_w = (max(s + len(a) for s, a in zip(sx, ax))
            + max(s + len(a) for s, a in zip(sy, ay)) - 1 + maxloop)
    W = hi_w - lo_w
    P = np.zeros((len(upairs), W), dtype=np.int64)
    for t, code in enumerate(upairs):
        ci, cj = divmod(int(code), len(ybank))
        conv = np.convolve(ax[ci], ay[cj])
        off = sx[ci] + sy[cj] - lo_w
        P[t, off:off + conv.shape[0]] = conv
    R = np.zeros((nkeys, W), dtype=np.int64)
    for c in np.unique(loops):
        m = loops == c
        C = sp.csr_matrix((cnt[m], (key_of_row[m], pair_idx[m])),
                          shape=(nkeys, len(upairs)), dtype=np.int64)
        Rc = np.asarray(C.dot(P))
        c = int(c)
        if c == 0:
            R += Rc
        else:
            binom = delta_pow_lint(c)
            for j, bc in enumerate(binom.coeffs):
                if bc:
                    sh = binom.shift + j
                    if sh > 0:
                        R[:, sh:] += bc * Rc[:, :W - sh]
                    elif sh < 0:
                        R[:, :sh] += bc * Rc[:, -sh:]
                    else:
                        R += bc * Rc
    keylist = [tuple(r) for r in keys.tolist()]
    return _rows_to_terms(keylist, R, lo_w)


def element_equal(x: TLElement, y: TLElement) -> bool:
    if (x.bottom, x.top) != (y.bottom, y.top):
        return False
    if x.is_zero() or y.is_zero():
        return x.is_zero() and y.is_zero()
    if set(x.terms) != set(y.terms):
        return False
    if x.rad == y.rad:
        a_num, a_den = _qprod_num_den_lints(x.scale / y.scale)
        for key, nx in x.terms.items():
            if l_mul(nx, a_num) is not l_mul(y.terms[key], a_den):
                return False
        return True
    # radicands differ: compare squared normal forms plus a sign probe
    px = x.rad * x.scale * x.scale
    py = y.rad * y.scale * y.scale
    rnum, rden = _qprod_num_den_lints(px / py)
    sx = 1 if x.scale.content > 0 else -1
    sy = 1 if y.scale.content > 0 else -1
    for key, nx in x.terms.items():
        ny = y.terms[key]
        lhs = l_mul(l_mul(nx, nx), rnum)
        rhs = l_mul(l_mul(ny, ny), rden)
        if lhs is not rhs:
            return False
        if not _lint_sign_pair(l_scale(nx, sx), l_scale(ny, sy)):
            return False
    return True


def scalar_value(x: TLElement) -> tuple[QProd, QProd, Lint]:
    """For an element supported on a single diagram: (scale, rad, poly)."""
    if len(x.terms) != 1:
        raise ValueError("element is not a scalar multiple of one diagram")
    (key, n), = x.terms.items()
    return x.scale, x.rad, n


def scalar_equals_qprod(scale: QProd, rad: QProd, n: Lint, target: QProd) -> bool:
    """Exact test  scale * sqrt(rad) * n == target  in the field."""
    if not n.coeffs:
        return target.content == 0
    lhs2 = rad * scale * scale
    ratio = lhs2 / (target * target)
    rnum, rden = _qprod_num_den_lints(ratio)
    if l_mul(l_mul(n, n), rnum) is not rden:
        return False
    sx = 1 if scale.content > 0 else -1
    st = 1 if target.content > 0 else -1
    return _lint_sign_pair(l_scale(n, sx), l_scale(L_ONE, st))


def element_normalize(x: TLElement) -> TLElement:
    """Fold common integer content, q-powers and q-integer factors of the
    coefficient polynomials into the scale.  Value-preserving.

    All transformations act on the distinct coefficient values, of which
    there are usually few; the term map is rebuilt through a pointer table.
    """
    if x.is_zero():
        return x
    distinct = {id(n): n for n in x.terms.values()}
    bank = list(distinct.values())
    g = 0
    shift = min(n.shift for n in bank)
    for n in bank:
        g = math.gcd(g, l_content(n))
    scale = x.scale
    if g > 1 or shift:
        table = {id(n): Lint(n.shift - shift, tuple(c // g for c in n.coeffs))
                 for n in bank}
        bank = list(table.values())
        scale = scale * QProd(Fraction(g), shift, ())
    else:
        table = {id(n): n for n in bank}
    # cancel inverse q-integer factors of the scale against all numerators
    changed = True
    while changed:
        changed = False
        for a, e in scale.factors:
            if e >= 0:
                continue
            probe = min(bank, key=lambda n: len(n.coeffs))
            if l_divexact(probe, q_int_lint(a)) is None:
                continue
            divided = {}
            ok = True
            for key_id, n in table.items():
                d = l_divexact(n, q_int_lint(a))
                if d is None:
                    ok = False
                    break
                divided[key_id] = d
            if ok:
                table = divided
                bank = list(table.values())
                scale = scale * QProd.qint(a)
                changed = True
                break
    terms = {k: table[id(n)] for k, n in x.terms.items()}
    return _element(x.bottom, x.top, terms, scale, x.rad)


# ---------------------------------------------------------------------------
# Named morphisms


_JW: dict[int, TLElement] = {}
_TR: dict[int, TLElement] = {}
_CERT: dict[int, bool] = {}


def jones_wenzl(y: int) -> TLElement:
    """The idempotent killed by every adjacent arc, by the one-step wall
    recursion; unit coefficient on the identity diagram."""
    if y < 0:
        raise ValueError("strand count must be >= 0")
    if y in _JW:
        return _JW[y]
    if y == 0:
        p = identity_element(0)
    elif y == 1:
        p = identity_element(1)
    else:
        prev = jones_wenzl(y - 1)
        prev1 = element_tensor(prev, identity_element(1))
        pieces = [(QProd.one(), prev1)]
        for r in range(1, y):
            # single bare diagram: arc pair created at slot r of the top row
            # and absorbed at the right edge of the bottom row
            d_r = _fk_wall_diagram(y, r)
            prod = element_mult(from_diagram(d_r), prev1)
            sgn = -1 if (y - r - 1) % 2 == 0 else 1
            mult = QProd(Fraction(sgn), 0, ()) * QProd.qint(r) * QProd.qint(y, -1)
            pieces.append((mult, prod))
        p = element_normalize(element_sum(pieces))
    _JW[y] = p
    return p


@lru_cache(maxsize=None)
def _fk_wall_diagram(y: int, r: int) -> TLDiagram:
    """Through strands except a top arc at slots r, r+1 (1-based) and a
    bottom arc at the last two slots; the net arc-pair of the wall term."""
    partner = [0] * (2 * y)
    for i in range(r - 1):
        partner[i] = y + i
        partner[y + i] = i
    partner[y + r - 1], partner[y + r] = y + r, y + r - 1
    for i in range(r - 1, y - 2):
        partner[i] = y + i + 2
        partner[y + i + 2] = i
    partner[y - 2], partner[y - 1] = y - 1, y - 2
    return TLDiagram(y, y, tuple(partner))


def wenzl_oracle(y: int) -> TLElement:
    """Independent construction through the classical two-term recursion."""
    if y <= 1:
        return jones_wenzl(y)
    prev = wenzl_oracle(y - 1)
    prev1 = element_tensor(prev, identity_element(1))
    e = cap_cup_element(y, y - 2)
    mid = element_mult(element_mult(prev1, e), prev1)
    coeff = QProd(Fraction(-1), 0, ()) * QProd.qint(y - 1) * QProd.qint(y, -1)
    return element_normalize(element_sum([(QProd.one(), prev1), (coeff, mid)]))


def nested_cup_morphism(r: int) -> TLElement:
    """[r+1]^(-1/2) (p_r tensor p_r) under r nested arcs, a map 0 -> 2r."""
    if r < 0:
        raise ValueError("arc count must be >= 0")
    if r in _TR:
        return _TR[r]
    if r == 0:
        t = identity_element(0)
    else:
        p = jones_wenzl(r)
        base = from_diagram(cup_nest(r))
        t = element_mult(element_tensor(identity_element(r), p), base)
        t = element_mult(element_tensor(p, identity_element(r)), t)
        t = element_sqrt_scale(t, QProd.qint(r + 1, -1))
        t = element_normalize(t)
    _TR[r] = t
    return t


def jw_certificate(y: int) -> bool:
    """Exact wall certificate: unit coefficient on the identity diagram,
    self-adjointness, and annihilation of every adjacent arc pair from both
    sides.  Together these pin the idempotent uniquely, and they justify the
    sandwich reduction used for large strand counts."""
    if y in _CERT:
        return _CERT[y]
    p = jones_wenzl(y)
    ok = True
    idkey = identity_diagram(y).partner if y else ()
    n_id = p.terms.get(tuple(idkey), L_ZERO)
    ok = ok and scalar_equals_qprod(p.scale, p.rad, n_id, QProd.one())
    ok = ok and element_equal(element_adjoint(p), p)
    # right annihilation then follows by taking adjoints, since p* = p and
    # the arc pairs are self-adjoint
    for i in range(y - 1):
        ok = ok and element_mult(p, cap_cup_element(y, i)).is_zero()
    _CERT[y] = ok
    return ok


def projector_sandwich(y: int, middle: TLElement) -> tuple[QProd, QProd, Lint]:
    """Scalar c with  p_y . middle . p_y == c p_y, computed by the wall
    certificate: every non-identity diagram has an adjacent top arc, hence
    dies against the left projector.  Returns (scale, rad, poly) of c."""
    if not jw_certificate(y):
        raise ArithmeticError("wall certificate failed; sandwich unsound")
    if (middle.bottom, middle.top) != (y, y):
        raise GradingError("middle element has the wrong grading")
    idkey = tuple(identity_diagram(y).partner) if y else ()
    for key in middle.terms:
        if key != idkey and not has_adjacent_top_pair(key, y, y):
            raise AssertionError("non-identity diagram without an adjacent top arc")
    return middle.scale, middle.rad, middle.terms.get(idkey, L_ZERO)


def mult_projector_pair(pl: TLElement, pr: TLElement, x: TLElement) -> TLElement:
    """(pl tensor pr) . x computed in two staged products."""
    nl = pl.bottom
    nr = pr.bottom
    stage = element_mult(element_tensor(identity_element(nl), pr), x)
    return element_mult(element_tensor(pl, identity_element(nr)), stage)


def rho_morphism(n: int, k: int, l: int) -> TLElement:
    """The canonical map from object l into the product of objects n and k,
    as an element of the (2l, 2n+2k) graded piece."""
    r = admissible_r(n, k, l)
    if r is None:
        raise FusionError(f"object {l} does not embed in {n} x {k}")
    t = nested_cup_morphism(r)
    core = element_tensor(element_tensor(identity_element(2 * n - r), t),
                          identity_element(2 * k - r))
    x = element_mult(core, jones_wenzl(2 * l))
    return element_normalize(mult_projector_pair(jones_wenzl(2 * n), jones_wenzl(2 * k), x))


def rho_middle(n: int, k: int, l: int) -> TLElement:
    """The conjugated middle  (1 x t_r* x 1)(p_2n x p_2k)(1 x t_r x 1)  on 2l
    strands, built through its tensor factorisation so the products stay
    small."""
    r = admissible_r(n, k, l)
    if r is None:
        raise FusionError(f"object {l} does not embed in {n} x {k}")
    if r == 0:
        return element_tensor(jones_wenzl(2 * n), jones_wenzl(2 * k))
    pr = jones_wenzl(r)
    left_wall = element_tensor(identity_element(2 * n - r), pr)
    right_wall = element_tensor(pr, identity_element(2 * k - r))
    xn = element_mult(element_mult(left_wall, jones_wenzl(2 * n)), left_wall)
    xk = element_mult(element_mult(right_wall, jones_wenzl(2 * k)), right_wall)
    mid = element_tensor(xn, xk)
    cupper = from_diagram(cup_nest(r))
    arcs_in = element_tensor(element_tensor(identity_element(2 * n - r), cupper),
                             identity_element(2 * k - r))
    arcs_out = element_adjoint(arcs_in)
    out = element_mult(arcs_out, element_mult(mid, arcs_in))
    return element_scale(out, QProd.qint(r + 1, -1))


def rho_normalization_check(n: int, k: int, l: int) -> bool:
    """Exact identity  rho* rho == C_(n,k,l) p_2l  through the wall
    certificate of p_2l.  Relies on idempotency of the two outer walls,
    which the projector suite verifies directly."""
    mid = rho_middle(n, k, l)
    sc, rd, lint = projector_sandwich(2 * l, mid)
    return scalar_equals_qprod(sc, rd, lint, coupling_qprod(n, k, l))


def rho_normalization_direct(n: int, k: int, l: int) -> bool:
    """Same identity by full expansion of both sides; feasible for small l."""
    rho = rho_morphism(n, k, l)
    lhs = element_mult(element_adjoint(rho), rho)
    rhs = element_scale(jones_wenzl(2 * l), coupling_qprod(n, k, l))
    return element_equal(lhs, rhs)


def phi_triple(alpha: int, side: str, k: int) -> tuple[int, int, int]:
    """(n', k', l') of the normalised intertwiner phi^(alpha)_{k,side}."""
    if k < 1:
        raise ValueError("block index must be >= 1")
    if alpha not in (-1, 0, 1) or side not in ("L", "R"):
        raise ValueError("bad label")
    if side == "L":
        return (1, k + alpha, k)
    return (k + alpha, 1, k)


def phi_morphism(alpha: int, side: str, k: int) -> TLElement:
    n, kk, l = phi_triple(alpha, side, k)
    rho = rho_morphism(n, kk, l)
    c = coupling_qprod(n, kk, l)
    return element_sqrt_scale(rho, c.inv())


def phi_family(k: int) -> dict:
    """All six normalised intertwiners out of block k."""
    return {(a, s): phi_morphism(a, s, k)
            for a in (1, 0, -1) for s in ("L", "R")}


def t2k_recursion_check(k: int) -> bool:
    """Nested-arc definition vs the three product recursions, exactly."""
    if k < 1:
        raise ValueError("k must be >= 1")
    direct = nested_cup_morphism(2 * k)
    prev = nested_cup_morphism(2 * (k - 1))
    t2 = nested_cup_morphism(2)
    mid = element_mult(
        element_tensor(element_tensor(identity_element(2 * k - 2), t2),
                       identity_element(2 * k - 2)), prev)
    pk = jones_wenzl(2 * k)
    coeff = (QProd.qint(2 * k - 1) * QProd.qint(3)) / QProd.qint(2 * k + 1)
    one_sided_l = element_sqrt_scale(
        element_mult(element_tensor(identity_element(2 * k), pk), mid), coeff)
    one_sided_r = element_sqrt_scale(
        element_mult(element_tensor(pk, identity_element(2 * k)), mid), coeff)
    two_sided = element_sqrt_scale(mult_projector_pair(pk, pk, mid), coeff)
    return (element_equal(direct, one_sided_l)
            and element_equal(direct, one_sided_r)
            and element_equal(direct, two_sided))


def unit_map() -> TLElement:
    """The unit viewed in the doubled calculus: delta^(-1/2) arc, 0 -> 2."""
    return generator_t(0, 0)


def mult_map() -> TLElement:
    """The multiplication viewed in the doubled calculus: a map 4 -> 2."""
    arc = from_diagram(TLDiagram(4, 2, (4, 2, 1, 5, 0, 3)))
    return element_sqrt_scale(arc, QProd.qint(2))


def mstar_expansion_check() -> bool:
    """Adjoint multiplication equals [2] times the middle-arc generator."""
    mstar = element_adjoint(mult_map())
    rhs = element_scale(generator_t(1, 1), QProd.qint(2))
    return element_equal(mstar, rhs)


def two_step_middle(k: int) -> TLElement:
    """Middle factor M of the two-step wall recursion

        p_{2k+2} = (1_2 x p_{2k}) M (p_{2k} x 1_2),

    a six-diagram element on 2k+2 strands."""
    if k < 1:
        raise ValueError("k must be >= 1")
    y = 2 * k
    t1 = from_diagram(cup(), rad=QProd.qint(2, -1))
    t1s = element_adjoint(t1)
    one = identity_element
    qi = QProd.qint

    def coeffd(c: Fraction, *fs) -> QProd:
        out = QProd.from_fraction(c)
        for a, e in fs:
            out = out * qi(a, e)
        return out

    b = element_tensor(element_tensor(element_tensor(t1, one(y - 1)), t1s), one(1))
    c = element_tensor(element_tensor(element_tensor(element_tensor(one(1), t1), one(y - 2)), t1s), one(1))
    d = element_tensor(element_tensor(t1, one(y)), t1s)
    e = element_tensor(element_tensor(element_tensor(one(1), t1), one(y - 1)), t1s)
    fcup = element_mult(element_tensor(element_tensor(one(1), t1), one(1)), t1)
    fcap = element_adjoint(fcup)
    f = element_tensor(element_tensor(fcup, one(y - 2)), fcap)

    # binomial coefficients like [2]/[y+1] + [2][y]/([y+1][y+2]) are genuine
    # sums, so each contribution enters as its own monomial piece
    pieces = [(QProd.one(), identity_element(y + 2)),
              (coeffd(Fraction(1), (2, 1), (y + 1, -1)), b),
              (coeffd(Fraction(1), (2, 1), (y, 1), (y + 1, -1), (y + 2, -1)), b),
              (coeffd(Fraction(-1), (2, 2), (y + 1, -1)), c),
              (coeffd(Fraction(-1), (2, 2), (y, 1), (y + 1, -1), (y + 2, -1)), c),
              (coeffd(Fraction(-1), (2, 1), (y + 2, -1)), d),
              (coeffd(Fraction(1), (2, 2), (y + 2, -1)), e),
              (coeffd(Fraction(1), (2, 3), (y + 1, -1), (y + 2, -1)), f)]
    return element_sum(pieces)


def two_step_check(k: int) -> bool:
    """Exact check of the two-step wall recursion against the one-step one."""
    pk = jones_wenzl(2 * k)
    mid = two_step_middle(k)
    lhs = element_mult(element_tensor(identity_element(2), pk), mid)
    lhs = element_mult(lhs, element_tensor(pk, identity_element(2)))
    return element_equal(element_normalize(lhs), jones_wenzl(2 * k + 2))


def cap_contraction_check(k: int) -> bool:
    """Closing the middle of the 2k-arc with the multiplication drops it to
    the (2k-1)-arc with the stated factor, exactly."""
    t = nested_cup_morphism(2 * k)
    m = mult_map()
    mid = element_tensor(element_tensor(identity_element(2 * k - 2), m),
                         identity_element(2 * k - 2))
    lhs = element_mult(mid, t)
    coeff = (QProd.qint(2) * QProd.qint(2 * k + 1)) / QProd.qint(2 * k)
    rhs = element_sqrt_scale(nested_cup_morphism(2 * k - 1), coeff)
    return element_equal(lhs, rhs)


def aux_contraction_check() -> bool:
    """(1_2 x t_2*)(t_2 x 1_2) and its mirror both equal [3]^(-1) p_2."""
    t2 = nested_cup_morphism(2)
    t2s = element_adjoint(t2)
    one2 = identity_element(2)
    lhs1 = element_mult(element_tensor(one2, t2s), element_tensor(t2, one2))
    lhs2 = element_mult(element_tensor(t2s, one2), element_tensor(one2, t2))
    rhs = element_scale(jones_wenzl(2), QProd.qint(3, -1))
    return element_equal(lhs1, rhs) and element_equal(lhs2, rhs)


def odd_insertion_check(n: int, k: int, s: int) -> bool:
    """Expansion of an odd arc inserted between identity walls through the
    adjoint multiplication, exactly."""
    r = 2 * s + 1
    if 2 * n - r < 0 or 2 * k - r < 0:
        raise ValueError("walls too narrow for the arc")
    t = nested_cup_morphism(r)
    lhs = element_tensor(element_tensor(identity_element(2 * n - r), t),
                         identity_element(2 * k - r))
    p = jones_wenzl(2 * s + 1)
    t2s = nested_cup_morphism(2 * s)
    mstar = element_adjoint(mult_map())
    inner = element_mult(
        element_tensor(element_tensor(identity_element(2), t2s), identity_element(2)),
        mstar)
    rhs = element_tensor(
        element_tensor(identity_element(2 * n - 2 * s - 2), inner),
        identity_element(2 * k - 2 * s - 2))
    rhs = element_mult(
        element_tensor(element_tensor(element_tensor(
            identity_element(2 * n - 2 * s - 1), p), p),
            identity_element(2 * k - 2 * s - 1)),
        rhs)
    rhs = element_sqrt_scale(
        rhs, QProd.qint(2 * s + 1) / (QProd.qint(2 * s + 2) * QProd.qint(2)))
    return element_equal(lhs, rhs)
