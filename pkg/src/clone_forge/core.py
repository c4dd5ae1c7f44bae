"""Finite domains and finitary operations.

An operation is a map A^d -> A on the domain A = {0, ..., n-1}. It is
backed either by a dense value table in row-major order or by a named
rule evaluated on demand; the two forms are extensionally
interchangeable. Tables use the fixed encoding

    index(x_1, ..., x_d) = sum(x_i * n**(d - i))

so x_1 is the most significant digit and serialized tables are
bit-exact across runs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import rules
from .errors import BudgetExceededError

# Largest table we are willing to materialize (entries). Rule-backed
# operations above this size evaluate on demand only.
MAX_TABLE_SIZE = 10**7

# Largest table used for extensional equality between rule-backed
# operations; beyond it equality falls back to rule identity.
_MAX_EQ_TABLE = 2**20


@dataclass(frozen=True)
class Domain:
    """The finite set {0, 1, ..., size - 1}."""

    size: int

    def __post_init__(self):
        if self.size < 2:
            raise ValueError(f"domain size must be >= 2, got {self.size}")

    def __iter__(self):
        return iter(range(self.size))

    def __contains__(self, x):
        return isinstance(x, int) and 0 <= x < self.size


def _table_dtype(n: int):
    return np.uint8 if n <= 256 else np.int64


class Operation:
    """A finitary operation on a finite domain.

    Use :meth:`from_table` or :meth:`from_rule` to construct. Instances
    are immutable and safe to share between threads; evaluation is pure.
    """

    __slots__ = ("domain", "arity", "rule", "_table", "_eval")

    def __init__(self, domain: Domain, arity: int, *, table=None, rule=None):
        if arity < 1:
            raise ValueError(f"arity must be >= 1, got {arity}")
        if (table is None) == (rule is None):
            raise ValueError("exactly one of table or rule must be given")
        self.domain = domain
        self.arity = arity
        self.rule = rule
        self._table = table
        self._eval = rules.evaluator(rule) if rule is not None else None

    @classmethod
    def from_table(cls, domain: Domain, arity: int, values) -> "Operation":
        n = domain.size
        table = np.array(values, dtype=_table_dtype(n))
        if table.ndim != 1 or table.shape[0] != n**arity:
            raise ValueError(
                f"table must have exactly {n**arity} entries for arity {arity} "
                f"on a {n}-element domain, got shape {table.shape}"
            )
        if table.size and (int(table.min()) < 0 or int(table.max()) >= n):
            raise ValueError("table values must lie in the domain")
        table.setflags(write=False)
        return cls(domain, arity, table=table)

    @classmethod
    def from_rule(cls, name: str, **params) -> "Operation":
        spec = rules.RuleSpec.make(name, params)
        n, arity = rules.signature(spec)
        return cls(Domain(n), arity, rule=spec)

    @property
    def is_tabulated(self) -> bool:
        return self._table is not None

    def table_array(self) -> np.ndarray:
        """The dense table, materializing a rule if needed (guarded)."""
        if self._table is None:
            n = self.domain.size
            size = n**self.arity
            if size > MAX_TABLE_SIZE:
                raise BudgetExceededError(
                    f"cannot materialize {size}-entry table for rule "
                    f"{self.rule.name} (cap {MAX_TABLE_SIZE})",
                    required=size,
                    budget=MAX_TABLE_SIZE,
                )
            table = rules.build_table(self.rule)
            table.setflags(write=False)
            self._table = table
        return self._table

    def table(self) -> tuple:
        """The dense table as a plain tuple of ints."""
        return tuple(int(v) for v in self.table_array())

    def tabulated(self) -> "Operation":
        """An equivalent table-backed operation."""
        if self.is_tabulated:
            return self
        return Operation(self.domain, self.arity, table=self.table_array())

    def __call__(self, *args):
        return evaluate(self, args)

    def __eq__(self, other):
        if not isinstance(other, Operation):
            return NotImplemented
        if self.domain != other.domain or self.arity != other.arity:
            return False
        size = self.domain.size**self.arity
        if size <= _MAX_EQ_TABLE:
            return bool(np.array_equal(self.table_array(), other.table_array()))
        # Conservative approximation: huge rule-backed operations compare
        # by rule identity only.
        return self.rule is not None and self.rule == other.rule

    def __hash__(self):
        size = self.domain.size**self.arity
        if size <= _MAX_EQ_TABLE:
            return hash((self.domain.size, self.arity, self.table_array().tobytes()))
        return hash((self.domain.size, self.arity, self.rule))

    def __repr__(self):
        body = f"rule={self.rule.name}{dict(self.rule.params)}" if self.rule else "table"
        return f"Operation(n={self.domain.size}, arity={self.arity}, {body})"


def evaluate(op: Operation, args) -> int:
    """Apply ``op`` to a tuple of domain elements."""
    args = tuple(args)
    if len(args) != op.arity:
        raise ValueError(f"expected {op.arity} arguments, got {len(args)}")
    n = op.domain.size
    idx = 0
    for x in args:
        if not 0 <= x < n:
            raise ValueError(f"argument {x} outside domain of size {n}")
        idx = idx * n + x
    if op._table is not None:
        return int(op._table[idx])
    return op._eval(args)


def projection(domain: Domain, k: int, i: int) -> Operation:
    """The k-ary projection onto coordinate i (1-indexed)."""
    if not 1 <= i <= k:
        raise ValueError(f"projection index {i} out of range 1..{k}")
    n = domain.size
    if n**k > MAX_TABLE_SIZE:
        raise BudgetExceededError(f"projection table of size {n**k} too large")
    table = projection_table(n, k, i)
    return Operation(domain, k, table=table)


def projection_table(n: int, k: int, i: int) -> np.ndarray:
    """Dense table of the k-ary projection onto coordinate i (1-indexed)."""
    idx = np.arange(n**k, dtype=np.int64)
    table = (idx // n ** (k - i)) % n
    table = table.astype(_table_dtype(n))
    table.setflags(write=False)
    return table


def compose(f: Operation, gs) -> Operation:
    """The composition f(g_1, ..., g_k) as a table-backed operation.

    All g_i must share a domain and arity k'; the result has arity k'
    and satisfies f(g_1, ..., g_k)(x) = f(g_1(x), ..., g_k(x)).
    """
    gs = list(gs)
    if len(gs) != f.arity:
        raise ValueError(f"need {f.arity} inner operations, got {len(gs)}")
    if not gs:
        raise ValueError("composition with zero inner operations")
    domain = gs[0].domain
    inner_arity = gs[0].arity
    for g in gs:
        if g.domain != domain or g.arity != inner_arity:
            raise ValueError("inner operations must share domain and arity")
    if f.domain != domain:
        raise ValueError("outer and inner operations must share a domain")
    n = domain.size
    ftab = f.table_array()
    idx = np.zeros(n**inner_arity, dtype=np.int64)
    for g in gs:
        idx *= n
        idx += g.table_array().astype(np.int64)
    return Operation(domain, inner_arity, table=ftab[idx])


def maj_of_near_unanimous(args):
    """The prevailing value of a near-unanimous tuple, else None.

    A tuple is near-unanimous when all entries but at most one coincide;
    unanimous tuples count as the degenerate case.
    """
    args = tuple(args)
    if len(args) < 3:
        raise ValueError("near-unanimity needs at least 3 arguments")
    return rules.prevailing_value(args)


def is_near_unanimity(op: Operation) -> bool:
    """Does ``op`` return the prevailing value on every near-unanimous input?"""
    if op.arity < 3:
        raise ValueError("not an nu-candidate: arity must be >= 3")
    witness = near_unanimity_witness(op)
    return witness is None


def near_unanimity_witness(op: Operation):
    """A near-unanimous input where ``op`` fails to reflect, or None."""
    if op.arity < 3:
        raise ValueError("not an nu-candidate: arity must be >= 3")
    n = op.domain.size
    for x in range(n):
        base = [x] * op.arity
        for pos in range(op.arity):
            for y in range(n):
                base[pos] = y
                if evaluate(op, base) != x:
                    return tuple(base), evaluate(op, base), x
            base[pos] = x
    return None


def is_conservative(op: Operation) -> bool:
    """Is the output always one of the arguments?"""
    return conservativity_witness(op) is None


def conservativity_witness(op: Operation):
    """An input whose output is not among its arguments, or None."""
    n = op.domain.size
    table = op.table_array()
    for idx, args in enumerate(itertools.product(range(n), repeat=op.arity)):
        out = int(table[idx])
        if out not in args:
            return args, out
    return None


def essential_variable_count(op: Operation) -> int:
    """Number of argument positions the output actually depends on."""
    n = op.domain.size
    grid = op.table_array().reshape((n,) * op.arity)
    count = 0
    for axis in range(op.arity):
        first = grid.take(indices=[0], axis=axis)
        if bool(np.any(grid != first)):
            count += 1
    return count
