"""Relations as canonical tuple sets, images under operations, and
preservation checking.

A relation of arity l is a set of l-tuples over the domain, stored
sorted lexicographically; the matrix view has the tuples as columns in
that order, so "row i" is the tuple of i-th coordinates.

The exhaustive image/preservation path enumerates all |rel|**d column
selections in fixed-size chunks with numpy, short-circuiting on the
first counterexample. A configurable budget caps the enumeration; an
exceeded budget raises BudgetExceededError so callers can fall back to
a specialized checker or report the check as inconclusive.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from . import rules
from .core import Domain, Operation
from .errors import BudgetExceededError

# Cap on |rel|**arity selections for one exhaustive scan.
DEFAULT_BUDGET = 10**8

_CHUNK = 1 << 19
_MAX_LUT = 1 << 22


class Relation:
    """A finite relation: a deduplicated, sorted set of l-tuples."""

    __slots__ = ("domain", "arity", "tuples", "_set")

    def __init__(self, domain: Domain, arity: int, tuples=()):
        if arity < 1:
            raise ValueError(f"relation arity must be >= 1, got {arity}")
        n = domain.size
        canonical = set()
        for t in tuples:
            t = tuple(int(x) for x in t)
            if len(t) != arity:
                raise ValueError(f"tuple {t} has length {len(t)}, expected {arity}")
            if any(not 0 <= x < n for x in t):
                raise ValueError(f"tuple {t} outside domain of size {n}")
            canonical.add(t)
        self.domain = domain
        self.arity = arity
        self.tuples = tuple(sorted(canonical))
        self._set = frozenset(canonical)

    def __len__(self):
        return len(self.tuples)

    def __iter__(self):
        return iter(self.tuples)

    def __contains__(self, t):
        return tuple(t) in self._set

    def __eq__(self, other):
        if not isinstance(other, Relation):
            return NotImplemented
        return (
            self.domain == other.domain
            and self.arity == other.arity
            and self.tuples == other.tuples
        )

    def __hash__(self):
        return hash((self.domain.size, self.arity, self.tuples))

    def __repr__(self):
        return f"Relation(n={self.domain.size}, arity={self.arity}, size={len(self)})"

    def is_subset(self, other: "Relation") -> bool:
        return self._set <= other._set

    def without(self, t) -> "Relation":
        """The relation with one tuple removed."""
        t = tuple(t)
        if t not in self._set:
            raise ValueError(f"{t} is not a member")
        return Relation(self.domain, self.arity, self._set - {t})

    def union_tuples(self, extra) -> "Relation":
        return Relation(self.domain, self.arity, self.tuples + tuple(extra))


def row(rel: Relation, i: int) -> tuple:
    """Row i (1-indexed) of the matrix whose columns are rel's tuples."""
    if not 1 <= i <= rel.arity:
        raise ValueError(f"row index {i} out of range 1..{rel.arity}")
    return tuple(t[i - 1] for t in rel.tuples)


def scaled_identity(domain: Domain, x: int, l: int) -> Relation:
    """The l-ary relation with x on the matrix diagonal, zero elsewhere."""
    if x not in domain:
        raise ValueError(f"{x} outside domain of size {domain.size}")
    if l < 1:
        raise ValueError(f"arity must be >= 1, got {l}")
    return Relation(domain, l, rules.diagonal_tuples(x, l))


def full_relation(domain: Domain, l: int) -> Relation:
    """All l-tuples over the domain (small l only)."""
    if domain.size**l > 10**6:
        raise BudgetExceededError(f"full relation of size {domain.size**l} too large")
    return Relation(domain, l, itertools.product(range(domain.size), repeat=l))


@dataclass(frozen=True)
class SelectionWitness:
    """One column selection and the output column it produces."""

    columns: tuple
    output: tuple


@dataclass(frozen=True)
class PreservationResult:
    preserved: bool
    witness: SelectionWitness | None
    mode: str
    selections: int
    seconds: float
    achieved: tuple | None = None


def _decode_code(code: int, n: int, l: int) -> tuple:
    digits = []
    for _ in range(l):
        digits.append(code % n)
        code //= n
    return tuple(reversed(digits))


class _Scan:
    """Chunked enumeration of all |rel|**d selections for one operation."""

    def __init__(self, op: Operation, rel: Relation, budget: int):
        if op.domain != rel.domain:
            raise ValueError("operation and relation must share a domain")
        self.op = op
        self.rel = rel
        self.m = len(rel)
        self.d = op.arity
        self.n = op.domain.size
        self.l = rel.arity
        self.total = self.m**self.d
        if self.total > budget:
            raise BudgetExceededError(
                f"{self.total} selections exceed budget {budget}",
                required=self.total,
                budget=budget,
            )
        # Raises BudgetExceededError if the rule cannot be materialized.
        self.table = op.table_array().astype(np.int64)
        self.V = np.array(rel.tuples, dtype=np.int64).reshape(self.m, self.l)
        self.opw = self.n ** np.arange(self.d - 1, -1, -1, dtype=np.int64)
        self.relw = self.n ** np.arange(self.l - 1, -1, -1, dtype=np.int64)
        self.rel_codes = self.V @ self.relw

    def chunks(self):
        """Yield (base, output codes, digit arrays) per chunk of selections."""
        for base in range(0, self.total, _CHUNK):
            cnt = min(_CHUNK, self.total - base)
            rem = np.arange(base, base + cnt, dtype=np.int64)
            digits = [None] * self.d
            for t in range(self.d - 1, -1, -1):
                digits[t] = rem % self.m
                rem //= self.m
            code = np.zeros(cnt, dtype=np.int64)
            for j in range(self.l):
                col = self.V[:, j]
                idx = np.zeros(cnt, dtype=np.int64)
                for t in range(self.d):
                    idx += col[digits[t]] * self.opw[t]
                code += self.table[idx] * self.relw[j]
            yield base, code, digits

    def membership(self):
        """Vectorized membership test for output codes."""
        space = self.n**self.l
        if space <= _MAX_LUT:
            lut = np.zeros(space, dtype=bool)
            lut[self.rel_codes] = True
            return lambda code: lut[code]
        sorted_codes = np.sort(self.rel_codes)
        return lambda code: np.isin(code, sorted_codes)

    def witness_at(self, pos: int, code: int, digits) -> SelectionWitness:
        columns = tuple(self.rel.tuples[int(digits[t][pos])] for t in range(self.d))
        return SelectionWitness(columns=columns, output=_decode_code(code, self.n, self.l))


def preserves(op: Operation, rel: Relation, budget: int = DEFAULT_BUDGET) -> PreservationResult:
    """Exhaustively check image(op, rel) subset-of rel.

    Returns a result carrying one replayable counterexample (the chosen
    columns and the offending output column) when preservation fails.
    """
    start = time.perf_counter()
    if len(rel) == 0:
        return PreservationResult(True, None, "naive", 0, time.perf_counter() - start)
    scan = _Scan(op, rel, budget)
    member = scan.membership()
    for base, code, digits in scan.chunks():
        ok = member(code)
        if not ok.all():
            pos = int(np.flatnonzero(~ok)[0])
            witness = scan.witness_at(pos, int(code[pos]), digits)
            return PreservationResult(
                False, witness, "naive", scan.total, time.perf_counter() - start
            )
    return PreservationResult(True, None, "naive", scan.total, time.perf_counter() - start)


def image(op: Operation, rel: Relation, budget: int = DEFAULT_BUDGET) -> Relation:
    """The image relation: every column obtainable by applying op row-wise
    to selections of columns from rel (with repetition)."""
    if len(rel) == 0:
        return Relation(rel.domain, rel.arity, ())
    scan = _Scan(op, rel, budget)
    seen = set()
    for _, code, _ in scan.chunks():
        seen.update(int(c) for c in np.unique(code))
    tuples = [_decode_code(c, scan.n, scan.l) for c in sorted(seen)]
    return Relation(rel.domain, rel.arity, tuples)
