"""Planar pairing diagrams between two rows of boundary points.

A diagram of type (bottom, top) has ``bottom`` points on the lower row and
``top`` points on the upper row, joined by a noncrossing perfect pairing.
Points are indexed 0..bottom-1 left to right on the lower row, then
bottom..bottom+top-1 left to right on the upper row.  The pairing is stored
as an involutive partner array.

Walking the boundary bottom left-to-right and then top right-to-left visits
the points in the circular order of the rectangle, so a pairing is planar
exactly when its partner sequence is a balanced bracket sequence in those
circular coordinates.

Composition stacks one diagram on top of another, traces the strands through
the glued middle row and reports the number of closed loops removed; scalar
bookkeeping for those loops belongs to callers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence


class GradingError(ValueError):
    """Boundary sizes do not match up."""


@dataclass(frozen=True)
class TLDiagram:
    bottom: int
    top: int
    partner: tuple[int, ...]

    def __post_init__(self):
        n = self.bottom + self.top
        if len(self.partner) != n:
            raise ValueError("partner array has the wrong length")
        if n % 2:
            raise ValueError("total number of boundary points must be even")
        if not _is_noncrossing(self.bottom, self.top, self.partner):
            raise ValueError("pairing is not an involution or crosses itself")

    def __repr__(self):
        return f"TLDiagram({self.bottom},{self.top};{list(self.partner)})"


def _circular(bottom: int, top: int, i: int) -> int:
    """Index of boundary point i in the circular order of the rectangle."""
    if i < bottom:
        return i
    return bottom + (bottom + top - 1 - i)


def _is_noncrossing(bottom: int, top: int, partner: Sequence[int]) -> bool:
    n = bottom + top
    for i, p in enumerate(partner):
        if not 0 <= p < n or p == i or partner[p] != i:
            return False
    pos = [0] * n
    for i in range(n):
        pos[_circular(bottom, top, i)] = i
    stack = []
    for c in range(n):
        i = pos[c]
        j = partner[i]
        cj = _circular(bottom, top, j)
        if cj > c:
            stack.append(c)
        else:
            if not stack or stack[-1] != cj:
                return False
            stack.pop()
    return not stack


def _from_circular_pairs(bottom: int, top: int, cpair: Sequence[int]) -> TLDiagram:
    n = bottom + top
    pos = [0] * n
    for i in range(n):
        pos[_circular(bottom, top, i)] = i
    partner = [0] * n
    for c, c2 in enumerate(cpair):
        partner[pos[c]] = pos[c2]
    return TLDiagram(bottom, top, tuple(partner))


def _nested_sequences(n: int) -> Iterator[tuple[int, ...]]:
    """All balanced pairings of n points in line order (n even)."""
    pairing = [-1] * n

    def fill(points: tuple[int, ...]) -> Iterator[None]:
        if not points:
            yield None
            return
        a = points[0]
        for t in range(1, len(points), 2):
            b = points[t]
            pairing[a], pairing[b] = b, a
            inner, outer = points[1:t], points[t + 1:]
            for _ in fill(inner):
                yield from fill(outer)

    for _ in fill(tuple(range(n))):
        yield tuple(pairing)


def enumerate_diagrams(bottom: int, top: int) -> list[TLDiagram]:
    """All (bottom, top)-diagrams in a deterministic order.

    The count is the Catalan number of (bottom+top)/2.  An odd total means
    the morphism space is zero and the list is empty.
    """
    if bottom < 0 or top < 0:
        raise ValueError("negative boundary size")
    n = bottom + top
    if n % 2:
        return []
    return [_from_circular_pairs(bottom, top, c) for c in _nested_sequences(n)]


def catalan(m: int) -> int:
    return math.comb(2 * m, m) // (m + 1)


def identity_diagram(n: int) -> TLDiagram:
    return TLDiagram(n, n, tuple(list(range(n, 2 * n)) + list(range(n))))


def cup() -> TLDiagram:
    """The (0,2) diagram."""
    return TLDiagram(0, 2, (1, 0))


def cap() -> TLDiagram:
    """The (2,0) diagram."""
    return TLDiagram(2, 0, (1, 0))


def cup_nest(r: int) -> TLDiagram:
    """r nested arcs as a (0, 2r) diagram; the outermost joins the ends."""
    partner = tuple(2 * r - 1 - i for i in range(2 * r))
    return TLDiagram(0, 2 * r, partner)


def cap_nest(r: int) -> TLDiagram:
    return adjoint_diagram(cup_nest(r))


def cap_cup(n: int, i: int) -> TLDiagram:
    """Through strands with a cap and a cup at slots i, i+1 (0-based)."""
    if not 0 <= i <= n - 2:
        raise ValueError("cap-cup slot out of range")
    partner = list(range(n, 2 * n)) + list(range(n))
    partner[i], partner[i + 1] = i + 1, i
    partner[n + i], partner[n + i + 1] = n + i + 1, n + i
    return TLDiagram(n, n, tuple(partner))


def compose_core(upper: Sequence[int], ub: int, ut: int,
                 lower: Sequence[int], lb: int, lt: int) -> tuple[tuple[int, ...], int]:
    """Partner array and loop count of the stacked pairing.

    ``upper`` sits above ``lower``; ub == lt is the glued row size.  Returns
    the pairing on lb bottom + ut top points and the number of closed loops.
    """
    s = ub
    out_n = lb + ut
    result = [-1] * out_n
    seen_mid = [False] * s if s else []
    for start in range(out_n):
        if result[start] >= 0:
            continue
        # walk from a free boundary point through the middle row
        if start < lb:
            side, v = 0, start          # in lower diagram
        else:
            side, v = 1, start - lb + s  # in upper diagram (its index)
        while True:
            if side == 0:
                v = lower[v]
                if v < lb:
                    end = v
                    break
                m = v - lb          # middle slot
                seen_mid[m] = True
                side, v = 1, m
            else:
                v = upper[v]
                if v >= s:
                    end = v - s + lb
                    break
                seen_mid[v] = True
                side, v = 0, lb + v
        result[start], result[end] = end, start
    loops = 0
    for m in range(s):
        if seen_mid[m]:
            continue
        loops += 1
        v = m
        while True:
            seen_mid[v] = True
            w = upper[v]            # stays within the middle row
            seen_mid[w] = True
            v = lower[lb + w] - lb
            if v == m:
                break
    return tuple(result), loops


def compose_diagrams(upper: TLDiagram, lower: TLDiagram) -> tuple[int, TLDiagram]:
    """Stack ``upper`` over ``lower``; returns (loops, result)."""
    if upper.bottom != lower.top:
        raise GradingError(
            f"cannot glue ({upper.bottom},{upper.top}) onto ({lower.bottom},{lower.top})")
    partner, loops = compose_core(upper.partner, upper.bottom, upper.top,
                                  lower.partner, lower.bottom, lower.top)
    return loops, TLDiagram(lower.bottom, upper.top, partner)


def tensor_partner(a: Sequence[int], ab: int, at: int,
                   b: Sequence[int], bb: int, bt: int) -> tuple[int, ...]:
    """Partner array of the side-by-side placement (a left of b)."""
    nb, nt = ab + bb, at + bt

    def re_a(i: int) -> int:
        return i if i < ab else i + bb

    def re_b(i: int) -> int:
        return ab + i if i < bb else ab + at + i

    out = [0] * (nb + nt)
    for i, p in enumerate(a):
        out[re_a(i)] = re_a(p)
    for i, p in enumerate(b):
        out[re_b(i)] = re_b(p)
    return tuple(out)


def tensor_diagrams(a: TLDiagram, b: TLDiagram) -> TLDiagram:
    return TLDiagram(a.bottom + b.bottom, a.top + b.top,
                     tensor_partner(a.partner, a.bottom, a.top,
                                    b.partner, b.bottom, b.top))


def adjoint_partner(p: Sequence[int], bottom: int, top: int) -> tuple[int, ...]:
    def flip(i: int) -> int:
        return i + top if i < bottom else i - bottom

    out = [0] * len(p)
    for i, j in enumerate(p):
        out[flip(i)] = flip(j)
    return tuple(out)


def adjoint_diagram(d: TLDiagram) -> TLDiagram:
    """Turn the picture upside-down; involutive."""
    return TLDiagram(d.top, d.bottom, adjoint_partner(d.partner, d.bottom, d.top))


def has_adjacent_top_pair(partner: Sequence[int], bottom: int, top: int) -> bool:
    """True when two neighbouring top points are paired with each other."""
    for i in range(bottom, bottom + top - 1):
        if partner[i] == i + 1:
            return True
    return False


def through_count(d: TLDiagram) -> int:
    return sum(1 for i in range(d.bottom) if d.partner[i] >= d.bottom)


# ---------------------------------------------------------------------------
# Rendering and serialization


def ascii_diagram(d: TLDiagram) -> str:
    """Small fixed-width picture: top row, connector field, bottom row."""
    width = max(d.bottom, d.top) * 2 + 1

    def x(i: int) -> int:
        return 2 * (i if i < d.bottom else i - d.bottom) + 1

    top_marks = [" "] * width
    bot_marks = [" "] * width
    for i in range(d.bottom):
        bot_marks[x(i)] = "o"
    for i in range(d.bottom, d.bottom + d.top):
        top_marks[x(i)] = "o"
    field = [[" "] * width for _ in range(3)]
    for i, j in enumerate(d.partner):
        if j < i:
            continue
        xi, xj = x(i), x(j)
        if i < d.bottom and j < d.bottom:          # lower arc
            for c in range(xi, xj + 1):
                field[2][c] = "_" if c not in (xi, xj) else ("\\" if c == xi else "/")
        elif i >= d.bottom and j >= d.bottom:      # upper arc
            for c in range(xi, xj + 1):
                field[0][c] = "_" if c not in (xi, xj) else ("/" if c == xi else "\\")
        else:                                       # through strand
            for row in range(3):
                field[row][xi] = "|"
    lines = ["".join(top_marks)] + ["".join(r) for r in field] + ["".join(bot_marks)]
    return "\n".join(lines)


def diagram_to_json(d: TLDiagram) -> str:
    return json.dumps({"bottom": d.bottom, "top": d.top, "partner": list(d.partner)})


def diagram_from_json(s: str) -> TLDiagram:
    obj = json.loads(s)
    return TLDiagram(obj["bottom"], obj["top"], tuple(obj["partner"]))


# ---------------------------------------------------------------------------
# Brute-force oracle used by the tests


@lru_cache(maxsize=None)
def _involutions(n: int) -> tuple[tuple[int, ...], ...]:
    if n == 0:
        return ((),)
    if n % 2:
        return ()
    out = []

    def rec(pairs, free):
        if not free:
            out.append(tuple(pairs))
            return
        a = free[0]
        for b in free[1:]:
            rec(pairs + [(a, b)], tuple(x for x in free if x not in (a, b)))

    rec([], tuple(range(n)))
    result = []
    for pset in out:
        partner = [0] * n
        for a, b in pset:
            partner[a], partner[b] = b, a
        result.append(tuple(partner))
    return tuple(result)


def enumerate_by_filter(bottom: int, top: int) -> list[TLDiagram]:
    """Independent enumeration: all involutions filtered for planarity."""
    n = bottom + top
    if n % 2:
        return []
    return [TLDiagram(bottom, top, p) for p in _involutions(n)
            if _is_noncrossing(bottom, top, p)]
