"""Exact arithmetic in the rational function field Q(q).

Everything downstream is written over the field of rational functions in a
single variable q with rational coefficients.  The loop parameter is
delta = q + 1/q, and q-integers are stored in the division-free form

    [a] = q^(a-1) + q^(a-3) + ... + q^(1-a),

so q = 1 is a regular point of every expression.

Three layers of increasing generality:

* ``Lint``       -- Laurent polynomial over Z, interned so identity implies
                    equality.  The workhorse coefficient type of the diagram
                    algebra.
* ``QProd``      -- a monomial  c * q^s * prod [a]^e  in the q-integers.
                    Every scalar prefactor appearing in the morphism
                    constructions has this factored shape, which keeps
                    cancellation trivial.
* ``QRat``       -- a fully general reduced ratio of Laurent polynomials.
                    Used for constants and closed-form identities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache


class QArithError(ValueError):
    """Domain error in the exact layer."""


class FusionError(QArithError):
    """Triple (n, k, l) is not admissible for the fusion rules."""


# ---------------------------------------------------------------------------
# Integer Laurent polynomials


class Lint:
    """Laurent polynomial over Z, canonical and interned.

    value = q**shift * sum(coeffs[i] * q**i).  ``coeffs`` is () exactly for
    the zero polynomial, otherwise its first and last entries are nonzero.
    Instances are pooled: equal values are the same object, so caches may key
    on ``id``.
    """

    __slots__ = ("shift", "coeffs", "_hash")
    _pool: dict = {}

    def __new__(cls, shift: int, coeffs) -> "Lint":
        coeffs = tuple(coeffs)
        lo, hi = 0, len(coeffs)
        while hi > lo and coeffs[hi - 1] == 0:
            hi -= 1
        while lo < hi and coeffs[lo] == 0:
            lo += 1
        if lo == hi:
            shift, coeffs = 0, ()
        else:
            shift, coeffs = shift + lo, coeffs[lo:hi]
        key = (shift, coeffs)
        inst = cls._pool.get(key)
        if inst is None:
            inst = object.__new__(cls)
            inst.shift = shift
            inst.coeffs = coeffs
            inst._hash = hash(key)
            cls._pool[key] = inst
        return inst

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return self is other

    def __bool__(self):
        return bool(self.coeffs)

    @property
    def degree_span(self) -> int:
        return len(self.coeffs)

    def __repr__(self):
        if not self.coeffs:
            return "Lint<0>"
        parts = []
        for i, c in enumerate(self.coeffs):
            if c:
                e = self.shift + i
                parts.append(f"{c:+d}q^{e}" if e else f"{c:+d}")
        return "Lint<" + " ".join(parts) + ">"


L_ZERO = Lint(0, ())
L_ONE = Lint(0, (1,))

_MUL_MEMO: dict = {}


def l_add(a: Lint, b: Lint) -> Lint:
    if not a.coeffs:
        return b
    if not b.coeffs:
        return a
    lo = min(a.shift, b.shift)
    hi = max(a.shift + len(a.coeffs), b.shift + len(b.coeffs))
    out = [0] * (hi - lo)
    oa = a.shift - lo
    for i, c in enumerate(a.coeffs):
        out[oa + i] = c
    ob = b.shift - lo
    for i, c in enumerate(b.coeffs):
        out[ob + i] += c
    return Lint(lo, out)


def l_neg(a: Lint) -> Lint:
    if not a.coeffs:
        return a
    return Lint(a.shift, tuple(-c for c in a.coeffs))


def l_sub(a: Lint, b: Lint) -> Lint:
    return l_add(a, l_neg(b))


def l_scale(a: Lint, n: int) -> Lint:
    if n == 0 or not a.coeffs:
        return L_ZERO
    if n == 1:
        return a
    return Lint(a.shift, tuple(c * n for c in a.coeffs))


def l_mul(a: Lint, b: Lint) -> Lint:
    if not a.coeffs or not b.coeffs:
        return L_ZERO
    if a is L_ONE:
        return b
    if b is L_ONE:
        return a
    key = (id(a), id(b)) if id(a) <= id(b) else (id(b), id(a))
    hit = _MUL_MEMO.get(key)
    if hit is not None:
        return hit
    ca, cb = a.coeffs, b.coeffs
    out = [0] * (len(ca) + len(cb) - 1)
    for i, x in enumerate(ca):
        if x:
            for j, y in enumerate(cb):
                if y:
                    out[i + j] += x * y
    r = Lint(a.shift + b.shift, out)
    _MUL_MEMO[key] = r
    return r


def l_content(a: Lint) -> int:
    g = 0
    for c in a.coeffs:
        g = math.gcd(g, c)
        if g == 1:
            return 1
    return g


def l_eval(a: Lint, q):
    """Evaluate at q (Fraction for exact work, float for numerics)."""
    acc = q * 0
    for c in reversed(a.coeffs):
        acc = acc * q + c
    return acc * q**a.shift


def l_divexact(a: Lint, d: Lint):
    """Exact division a / d, or None when d does not divide a.

    Performed over Q with an integrality check on the quotient, so it works
    for any nonzero divisor.
    """
    if not a.coeffs:
        return L_ZERO
    if not d.coeffs:
        raise ZeroDivisionError
    if len(a.coeffs) < len(d.coeffs):
        return None
    dn = d.coeffs
    lead = Fraction(dn[-1])
    rem = [Fraction(c) for c in a.coeffs]
    qlen = len(rem) - len(dn) + 1
    quot = [Fraction(0)] * qlen
    for i in range(qlen - 1, -1, -1):
        c = rem[i + len(dn) - 1]
        if not c:
            continue
        f = c / lead
        quot[i] = f
        for j, dc in enumerate(dn):
            rem[i + j] -= f * dc
    if any(rem[: len(dn) - 1]):
        return None
    if any(f.denominator != 1 for f in quot):
        return None
    return Lint(a.shift - d.shift, [int(f) for f in quot])


def l_is_palindromic(a: Lint) -> bool:
    """Invariance under q -> 1/q."""
    if not a.coeffs:
        return True
    if a.coeffs != a.coeffs[::-1]:
        return False
    return a.shift == -(a.shift + len(a.coeffs) - 1)


@lru_cache(maxsize=None)
def q_int_lint(a: int) -> Lint:
    """[a] as a symmetric Laurent polynomial."""
    if a < 0:
        raise QArithError("q-integer index must be >= 0")
    if a == 0:
        return L_ZERO
    coeffs = [0] * (2 * a - 1)
    for i in range(a):
        coeffs[2 * i] = 1
    return Lint(-(a - 1), coeffs)


@lru_cache(maxsize=None)
def delta_pow_lint(c: int) -> Lint:
    """[2]^c, used for removed-loop factors."""
    out = L_ONE
    two = q_int_lint(2)
    for _ in range(c):
        out = l_mul(out, two)
    return out


# ---------------------------------------------------------------------------
# Factored monomials in q-integers


def _int_sqrt_split(n: int) -> tuple[int, int]:
    """n = s*s*f with f squarefree, for positive n (trial division)."""
    s, f = 1, 1
    d = 2
    m = n
    while d * d <= m:
        if m % d == 0:
            e = 0
            while m % d == 0:
                m //= d
                e += 1
            s *= d ** (e // 2)
            if e % 2:
                f *= d
        d += 1 if d == 2 else 2
    f *= m
    return s, f


@dataclass(frozen=True)
class QProd:
    """content * q^shift * prod over (a, e) of [a]^e, with a >= 2, e != 0."""

    content: Fraction
    shift: int
    factors: tuple[tuple[int, int], ...]

    @staticmethod
    def one() -> "QProd":
        return QProd(Fraction(1), 0, ())

    @staticmethod
    def from_fraction(c) -> "QProd":
        return QProd(Fraction(c), 0, ())

    @staticmethod
    def qint(a: int, e: int = 1) -> "QProd":
        if a == 0:
            raise QArithError("[0] is zero and cannot be inverted or factored")
        if a == 1 or e == 0:
            return QProd.one()
        return QProd(Fraction(1), 0, ((a, e),))

    def is_one(self) -> bool:
        return self.content == 1 and self.shift == 0 and not self.factors

    def __mul__(self, other: "QProd") -> "QProd":
        d = dict(self.factors)
        for a, e in other.factors:
            e2 = d.get(a, 0) + e
            if e2:
                d[a] = e2
            else:
                d.pop(a, None)
        return QProd(self.content * other.content, self.shift + other.shift,
                     tuple(sorted(d.items())))

    def inv(self) -> "QProd":
        return QProd(1 / self.content, -self.shift,
                     tuple((a, -e) for a, e in self.factors))

    def __truediv__(self, other: "QProd") -> "QProd":
        return self * other.inv()

    def sqrt_split(self) -> tuple["QProd", "QProd"]:
        """self = root^2 * residue, residue exponents in {0,1}, squarefree
        positive content.  Requires positive content."""
        if self.content <= 0:
            raise QArithError("radicand must be positive")
        ns, nf = _int_sqrt_split(self.content.numerator)
        ds, df = _int_sqrt_split(self.content.denominator)
        root_c = Fraction(ns, ds)
        res_c = Fraction(nf, df)
        if self.shift % 2:
            root_s, res_s = (self.shift - 1) // 2, 1
        else:
            root_s, res_s = self.shift // 2, 0
        rootd: dict = {}
        res_f = []
        for a, e in self.factors:
            if e // 2:
                rootd[a] = rootd.get(a, 0) + e // 2
            if e % 2:
                res_f.append((a, 1))
                if e < 0:
                    # [a]^(2m+1) with e = 2m+1 < 0: e//2 already floored down,
                    # so root gets [a]^((e-1)/2) and residue [a]^(+1)
                    pass
        root = QProd(root_c, root_s,
                     tuple(sorted((a, e) for a, e in rootd.items() if e)))
        res = QProd(res_c, res_s, tuple(sorted(res_f)))
        return root, res

    def as_lints(self) -> tuple[Lint, Lint, Fraction, int]:
        """(num, den, content, shift) with num, den integer polynomials."""
        num, den = L_ONE, L_ONE
        for a, e in self.factors:
            p = q_int_lint(a)
            for _ in range(abs(e)):
                if e > 0:
                    num = l_mul(num, p)
                else:
                    den = l_mul(den, p)
        return num, den, self.content, self.shift

    def evalf(self, q: float) -> float:
        v = float(self.content) * q**self.shift
        for a, e in self.factors:
            v *= float(l_eval(q_int_lint(a), q)) ** e
        return v

    def eval_fraction(self, q: Fraction) -> Fraction:
        v = self.content * q**self.shift
        for a, e in self.factors:
            x = l_eval(q_int_lint(a), q)
            v *= x**e if e > 0 else 1 / x ** (-e)
        return v

    def as_qrat(self) -> "QRat":
        num, den, c, s = self.as_lints()
        return QRat.make(c, Lint(num.shift + s, num.coeffs), den)

    def __str__(self):
        bits = []
        if self.content != 1 or (not self.factors and not self.shift):
            bits.append(str(self.content))
        if self.shift:
            bits.append(f"q^{self.shift}")
        for a, e in self.factors:
            bits.append(f"[{a}]" + (f"^{e}" if e != 1 else ""))
        return "*".join(bits) if bits else "1"


# ---------------------------------------------------------------------------
# General rational functions


def _poly_gcd(a: Lint, b: Lint) -> Lint:
    """gcd of the underlying ordinary polynomials, primitive over Z with a
    positive leading coefficient (shifts ignored)."""
    pa = Lint(0, a.coeffs)
    pb = Lint(0, b.coeffs)
    while pb.coeffs:
        da, db = len(pa.coeffs) - 1, len(pb.coeffs) - 1
        if da < db:
            pa, pb = pb, pa
            continue
        lead = pb.coeffs[-1]
        rem = [c * lead ** (da - db + 1) for c in pa.coeffs]
        for i in range(da - db, -1, -1):
            f, r = divmod(rem[i + db], lead)
            if r:
                raise AssertionError("pseudo-division invariant broken")
            if f:
                for j, dc in enumerate(pb.coeffs):
                    rem[i + j] -= f * dc
                rem[i + db] = 0
        pr = Lint(0, rem[:db] if db else [])
        g = l_content(pr)
        if g > 1:
            pr = Lint(0, tuple(c // g for c in pr.coeffs))
        pa, pb = pb, pr
    g = l_content(pa)
    if g > 1:
        pa = Lint(0, tuple(c // g for c in pa.coeffs))
    if pa.coeffs and pa.coeffs[-1] < 0:
        pa = l_neg(pa)
    return pa


class QRat:
    """Reduced ratio  content * num / den  of integer Laurent polynomials.

    ``num`` and ``den`` are primitive with positive leading coefficients and
    gcd 1; ``den`` has shift 0 and a nonzero constant term, so q-power units
    live in ``num.shift``.  The representation is canonical and equality is
    structural.
    """

    __slots__ = ("content", "num", "den", "_hash")

    def __init__(self, content: Fraction, num: Lint, den: Lint):
        self.content = content
        self.num = num
        self.den = den
        self._hash = hash((content, num, den))

    @staticmethod
    def make(content, num: Lint, den: Lint) -> "QRat":
        content = Fraction(content)
        if not num.coeffs or content == 0:
            return QRat(Fraction(0), L_ZERO, L_ONE)
        if not den.coeffs:
            raise ZeroDivisionError("zero denominator")
        shift = num.shift - den.shift
        a = Lint(0, num.coeffs)
        b = Lint(0, den.coeffs)
        g = _poly_gcd(a, b)
        if len(g.coeffs) > 1:
            ca, cb = l_content(a), l_content(b)
            a2 = l_divexact(Lint(0, tuple(c // ca for c in a.coeffs)), g)
            b2 = l_divexact(Lint(0, tuple(c // cb for c in b.coeffs)), g)
            if a2 is None or b2 is None:
                raise AssertionError("gcd does not divide its arguments")
            content = content * Fraction(ca, cb)
            a, b = a2, b2
        cn = l_content(a)
        cd = l_content(b)
        if a.coeffs[-1] < 0:
            cn = -cn
        if b.coeffs[-1] < 0:
            cd = -cd
        content = content * Fraction(cn, cd)
        num = Lint(shift, tuple(c // cn for c in a.coeffs))
        den = Lint(0, tuple(c // cd for c in b.coeffs))
        return QRat(content, num, den)

    @staticmethod
    def from_int(n) -> "QRat":
        return QRat.make(Fraction(n), L_ONE, L_ONE)

    @staticmethod
    def from_lint(p: Lint) -> "QRat":
        return QRat.make(Fraction(1), p, L_ONE)

    def is_zero(self) -> bool:
        return not self.num.coeffs

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if not isinstance(other, QRat):
            return NotImplemented
        return (self.content == other.content and self.num is other.num
                and self.den is other.den)

    def __add__(self, other: "QRat") -> "QRat":
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        na = l_scale(l_mul(self.num, other.den),
                     self.content.numerator * other.content.denominator)
        nb = l_scale(l_mul(other.num, self.den),
                     other.content.numerator * self.content.denominator)
        num = l_add(na, nb)
        den = l_mul(self.den, other.den)
        c = Fraction(1, self.content.denominator * other.content.denominator)
        return QRat.make(c, num, den)

    def __neg__(self):
        return QRat(-self.content, self.num, self.den) if self.num.coeffs else self

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other: "QRat") -> "QRat":
        if self.is_zero() or other.is_zero():
            return QRAT_ZERO
        return QRat.make(self.content * other.content,
                         l_mul(self.num, other.num),
                         l_mul(self.den, other.den))

    def __truediv__(self, other: "QRat") -> "QRat":
        if other.is_zero():
            raise ZeroDivisionError
        if self.is_zero():
            return QRAT_ZERO
        return QRat.make(self.content / other.content,
                         l_mul(self.num, other.den),
                         l_mul(self.den, other.num))

    def __pow__(self, e: int) -> "QRat":
        if e < 0:
            return QRAT_ONE / self ** (-e)
        out = QRAT_ONE
        for _ in range(e):
            out = out * self
        return out

    def evalf(self, q: float) -> float:
        return float(self.content) * float(l_eval(self.num, q)) / float(l_eval(self.den, q))

    def eval_fraction(self, q: Fraction) -> Fraction:
        return self.content * l_eval(self.num, q) / l_eval(self.den, q)

    def eval_at_one(self) -> Fraction:
        return self.content * Fraction(sum(self.num.coeffs), sum(self.den.coeffs))

    def __repr__(self):
        return f"QRat({self.content} * {self.num!r} / {self.den!r})"


QRAT_ZERO = QRat(Fraction(0), L_ZERO, L_ONE)
QRAT_ONE = QRat(Fraction(1), L_ONE, L_ONE)


# ---------------------------------------------------------------------------
# The public q-number operations


def q_integer(a: int) -> QRat:
    """[a] in the division-free form; evaluation at q=1 gives a."""
    return QRat.from_lint(q_int_lint(a))


@lru_cache(maxsize=None)
def q_factorial_qprod(a: int) -> QProd:
    if a < 0:
        raise QArithError("factorial index must be >= 0")
    out = QProd.one()
    for i in range(2, a + 1):
        out = out * QProd.qint(i)
    return out


def q_factorial(a: int) -> QRat:
    """[a]! = [a][a-1]...[1], with [0]! = 1 as the empty product."""
    return q_factorial_qprod(a).as_qrat()


def quantum_dimension(k: int) -> QRat:
    """[2k+1], the loop value of the k-th irreducible object."""
    if k < 0:
        raise QArithError("object index must be >= 0")
    return q_integer(2 * k + 1)


def admissible_r(n: int, k: int, l: int):
    """The unique r with l = n+k-r and 0 <= r <= 2 min(n,k), else None."""
    r = n + k - l
    if 0 <= r <= 2 * min(n, k):
        return r
    return None


def coupling_qprod(n: int, k: int, l: int) -> QProd:
    """The squared-norm constant of the canonical intertwiner, factored."""
    r = admissible_r(n, k, l)
    if r is None:
        raise FusionError(f"no copy of object {l} inside {n} x {k}")
    num = (q_factorial_qprod(2 * n + 2 * k - r + 1) * q_factorial_qprod(2 * n - r)
           * q_factorial_qprod(r) * q_factorial_qprod(2 * k - r))
    den = (QProd.qint(r + 1) * QProd.qint(2 * l + 1) * q_factorial_qprod(2 * n)
           * q_factorial_qprod(2 * k) * q_factorial_qprod(2 * l))
    return num / den


def coupling_constant(n: int, k: int, l: int) -> QRat:
    """Same constant as a reduced rational function."""
    return coupling_qprod(n, k, l).as_qrat()


@dataclass(frozen=True)
class DeltaParameter:
    """Loop parameter delta >= 2 together with its q in (0, 1]."""

    delta: float
    q: float
    dimB: int | None = None

    def __post_init__(self):
        if abs(self.q + 1.0 / self.q - self.delta) > 1e-13:
            raise QArithError("q and delta are inconsistent")
        if not (0.0 < self.q <= 1.0):
            raise QArithError("q must lie in (0, 1]")


def q_from_delta(delta: float, dimB: int | None = None) -> DeltaParameter:
    """Solve q + 1/q = delta for the root in (0, 1]."""
    if delta < 2:
        raise QArithError("loop parameter must be >= 2")
    q = (delta - math.sqrt(delta * delta - 4.0)) / 2.0
    q = min(q, 1.0)
    return DeltaParameter(delta=delta, q=q, dimB=dimB)


def q_number_value(a: int, q: float) -> float:
    return float(l_eval(q_int_lint(a), q))


def ao_alpha(l: int, q: float) -> float:
    """Normalising weight of the length-l shell in the crossed-sum isometry.

    alpha_l = (sum over n+k=l of m_n m_k / m_l)^(-1/2) with m_j = [2j+1].
    """
    if not (0.0 < q < 1.0):
        raise QArithError("weights need q strictly inside (0, 1)")
    ml = q_number_value(2 * l + 1, q)
    s = 0.0
    for n in range(l + 1):
        k = l - n
        s += q_number_value(2 * n + 1, q) * q_number_value(2 * k + 1, q) / ml
    return s ** -0.5


def coupling_scan(nmax: int = 6, qvalues=None):
    """Empirical window of the coupling constants over a finite grid.

    Returns (overall_min, per_q) where per_q maps each grid q to the minimum
    over all admissible triples with n, k <= nmax.  All values land in
    (0, 1]; the positive overall minimum is the concrete stand-in for the
    uniform lower-bound constant.
    """
    if qvalues is None:
        qvalues = [x / 10.0 for x in range(1, 10)]
    per_q = {}
    overall = math.inf
    for q in qvalues:
        m = math.inf
        for n in range(nmax + 1):
            for k in range(nmax + 1):
                for r in range(0, 2 * min(n, k) + 1):
                    l = n + k - r
                    v = coupling_qprod(n, k, l).evalf(q)
                    m = min(m, v)
        per_q[q] = m
        overall = min(overall, m)
    return overall, per_q


def coupling_min_at(q: float, nmax: int = 6) -> float:
    """Minimum coupling constant over n, k <= nmax at a fixed q."""
    _, per = coupling_scan(nmax, [q])
    return per[q]
