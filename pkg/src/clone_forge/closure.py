"""Exact per-arity clone closure by worklist fixpoint, membership
testing, and bounded generation-arity analysis.

The m-ary part of the clone generated by a set F is computed exactly:
seed with the m projections and repeatedly apply every generator to
m-ary members until nothing new appears. Every m-ary term over F
evaluates node by node to an m-ary member of the growing set, so the
fixpoint is the full m-ary part. Each round only applies generators to
argument tuples touching at least one member discovered in the previous
round.

Members are dense value tables deduplicated by their bytes; generator
application is vectorized over batches of argument tuples. Explicit
numeric guards (member count, generator applications, table universe)
turn infeasible requests into clean errors instead of runaway work.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import Domain, Operation, projection_table
from .errors import GuardExceededError

MAX_MEMBERS = 2 * 10**6
MAX_APPLICATIONS = 10**9

_BATCH_CELLS = 1 << 22


@dataclass(frozen=True)
class ClosureSet:
    """The exact m-ary part of a generated clone."""

    domain: Domain
    arity: int
    generators: tuple
    tables: tuple  # member tables as bytes, in canonical (sorted) order

    @property
    def members(self) -> frozenset:
        return frozenset(self.tables)

    def __len__(self):
        return len(self.tables)

    def __contains__(self, table_bytes) -> bool:
        return table_bytes in self.members

    def contains_op(self, op: Operation) -> bool:
        if op.domain != self.domain or op.arity != self.arity:
            return False
        return op.table_array().astype(np.uint8).tobytes() in self.members

    def as_operations(self) -> list:
        n = self.domain.size
        return [
            Operation.from_table(self.domain, self.arity, np.frombuffer(b, dtype=np.uint8))
            for b in self.tables
        ]


def _universe_guard(n: int, m: int, cap: int):
    table_len = n**m
    if table_len > 64 or n**table_len > cap:
        raise GuardExceededError(
            f"closure universe {n}**{table_len} exceeds the member cap {cap}"
        )


def _block_ranges(kg: int, old: int, count: int):
    """Axis ranges covering [0, count)**kg minus [0, old)**kg, disjointly."""
    for mask in range(1, 2**kg):
        ranges = []
        empty = False
        for t in range(kg):
            if (mask >> t) & 1:
                lo, hi = old, count
            else:
                lo, hi = 0, old
            if lo >= hi:
                empty = True
                break
            ranges.append((lo, hi))
        if not empty:
            yield ranges


def close_at_arity(
    generators,
    m: int,
    domain: Domain | None = None,
    max_members: int = MAX_MEMBERS,
    max_applications: int = MAX_APPLICATIONS,
) -> ClosureSet:
    """The exact m-ary part of the clone generated by ``generators``."""
    gens = list(generators)
    if domain is None:
        if not gens:
            raise ValueError("domain required when there are no generators")
        domain = gens[0].domain
    for g in gens:
        if g.domain != domain:
            raise ValueError("generators must share a domain")
    if m < 1:
        raise ValueError(f"target arity must be >= 1, got {m}")
    n = domain.size
    if n > 256:
        raise GuardExceededError("closure supports domains up to 256 elements")
    _universe_guard(n, m, max_members)
    table_len = n**m

    proj_tables = [projection_table(n, m, i).astype(np.uint8) for i in range(1, m + 1)]

    # Projections among the generators contribute nothing new.
    gen_tabs = []
    for g in gens:
        gt = g.table_array().astype(np.int64)
        is_proj = any(
            np.array_equal(gt, projection_table(n, g.arity, i)) for i in range(1, g.arity + 1)
        )
        if not is_proj:
            gen_tabs.append((gt, g.arity))

    buf = np.zeros((max(64, 2 * m), table_len), dtype=np.uint8)
    index = {}
    count = 0

    def add_row(row) -> bool:
        nonlocal buf, count
        key = row.tobytes()
        if key in index:
            return False
        if count >= max_members:
            raise GuardExceededError(f"closure exceeded the member cap {max_members}")
        if count == buf.shape[0]:
            bigger = np.zeros((buf.shape[0] * 2, table_len), dtype=np.uint8)
            bigger[:count] = buf
            buf = bigger
        buf[count] = row
        index[key] = count
        count += 1
        return True

    for pt in proj_tables:
        add_row(pt)

    applications = 0
    old = 0
    while old < count:
        frontier_start = old
        old = count
        for gt, kg in gen_tabs:
            for ranges in _block_ranges(kg, frontier_start, old):
                sizes = [hi - lo for lo, hi in ranges]
                total = 1
                for s in sizes:
                    total *= s
                applications += total
                if applications > max_applications:
                    raise GuardExceededError(
                        f"closure exceeded the application cap {max_applications}"
                    )
                rows_per_batch = max(1, _BATCH_CELLS // table_len)
                for base in range(0, total, rows_per_batch):
                    cnt = min(rows_per_batch, total - base)
                    rem = np.arange(base, base + cnt, dtype=np.int64)
                    idx = np.zeros((cnt, table_len), dtype=np.int64)
                    for t in range(kg - 1, -1, -1):
                        lo, _ = ranges[t]
                        digit = rem % sizes[t] + lo
                        rem = rem // sizes[t]
                        idx *= n
                        idx += buf[digit]
                    results = gt[idx].astype(np.uint8)
                    uniq = np.unique(results, axis=0)
                    for row in uniq:
                        add_row(row)

    tables = tuple(sorted(index))
    return ClosureSet(domain=domain, arity=m, generators=tuple(gens), tables=tables)


def member(op: Operation, generators, domain: Domain | None = None) -> bool:
    """Is ``op`` in the clone generated by ``generators``?"""
    cs = close_at_arity(generators, op.arity, domain=domain or op.domain)
    return cs.contains_op(op)


@dataclass(frozen=True)
class LambdaVerdict:
    """Bounded evidence about the least k whose k-ary part generates."""

    candidate_k: int | None
    definitive_lower: int
    checked_arity_cap: int
    verdict: str

    def to_dict(self) -> dict:
        return {
            "candidate_k": self.candidate_k,
            "definitive_lower": self.definitive_lower,
            "checked_arity_cap": self.checked_arity_cap,
            "verdict": self.verdict,
        }


def lambda_bounded(generators, m_max: int, domain: Domain | None = None) -> LambdaVerdict:
    """Smallest k <= m_max whose k-ary part regenerates every part up to
    m_max, with a definitive lower bound from the failing candidates.

    The positive side is a bounded approximation ("no difference visible
    up to arity m_max"); the negative side is definitive, since a k-ary
    part that fails to regenerate some j-ary member can never generate
    the clone.
    """
    gens = list(generators)
    if domain is None:
        if not gens:
            raise ValueError("domain required when there are no generators")
        domain = gens[0].domain
    if m_max < 1:
        raise ValueError(f"arity cap must be >= 1, got {m_max}")

    base = {j: close_at_arity(gens, j, domain=domain) for j in range(1, m_max + 1)}

    last_failed = 0
    candidate = None
    for k in range(1, m_max + 1):
        part_k = base[k].as_operations()
        ok = True
        for j in range(1, m_max + 1):
            regenerated = close_at_arity(part_k, j, domain=domain)
            if regenerated.members != base[j].members:
                ok = False
                break
        if ok:
            candidate = k
            break
        last_failed = k

    definitive = last_failed + 1
    if candidate is None:
        text = (
            f"no k <= {m_max} regenerates all parts up to arity {m_max}; "
            f"lambda >= {definitive} definitively"
        )
    else:
        text = (
            f"lambda <= {candidate} as far as arity {m_max} can see; "
            f"lambda >= {definitive} definitively"
        )
    return LambdaVerdict(
        candidate_k=candidate,
        definitive_lower=definitive,
        checked_arity_cap=m_max,
        verdict=text,
    )
