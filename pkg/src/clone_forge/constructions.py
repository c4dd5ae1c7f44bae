"""Parametric builders for the lower-bound witness bundles, plus a
specialized preservation checker for their indicator operations.

Each bundle packs two relations (sigma inside rho) and two operations:
a k-ary indicator f that outputs n-1 exactly on the rows of sigma's
matrix, and a (d+1)-ary conservative near-unanimity operation g. The
``thm2`` family (d = 2, k = 2n, n >= 4) and the ``thm3`` family
(k = d(n-2), n >= 3, d >= 3) differ in how sigma and rho are laid out.

The indicator checker avoids enumerating |rel|**k column selections.
Selecting column s only interacts with the verdict through which matrix
rows it keeps "alive" at each output coordinate, so a scan over sigma's
elements tracking the set of alive (row, coordinate) pairs as a bitmask
visits every reachable output column exactly. Reachable states collapse
heavily (masks only lose bits), keeping the state space tiny, and
backpointers recover a concrete replayable selection for any violating
column.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from . import rules
from .core import Domain, Operation, evaluate
from .errors import GuardExceededError
from .relations import PreservationResult, Relation, SelectionWitness

# Pattern space of the indicator scan is 2**l; masks use l*l bits.
MAX_INDICATOR_ARITY = 20

_MAX_STATES = 200_000


@dataclass(frozen=True)
class ConstructionBundle:
    """One (sigma, rho, f, g) witness instance with its parameters."""

    name: str
    n: int
    d: int
    k: int
    sigma: Relation
    rho: Relation
    f: Operation
    g: Operation


def build_thm2(n: int) -> ConstructionBundle:
    """The k = 2n bundle on an n-element domain (requires n >= 4).

    sigma is the union of the diagonal pair relations for x = 1..n-1
    plus the tuples (2,1) and (1,2); rho adds (0,0). f is the 2n-ary
    row indicator of sigma and g the ternary prevailing-value operation.
    """
    if n < 4:
        raise ValueError(f"thm2 construction requires n >= 4, got n={n}")
    domain = Domain(n)
    sigma = Relation(domain, 2, rules.thm2_sigma_tuples(n))
    rho = sigma.union_tuples([(0, 0)])
    f = Operation.from_rule("thm2_f", n=n)
    g = Operation.from_rule("thm2_g", n=n)
    g.table_array()  # small, materialize eagerly
    return ConstructionBundle("thm2", n, 2, 2 * n, sigma, rho, f, g)


def build_thm3(n: int, d: int) -> ConstructionBundle:
    """The k = d(n-2) bundle on an n-element domain (n >= 3, d >= 3).

    sigma is the union of the d-ary diagonal relations for x = 1..n-2;
    rho adds every 0/(n-1) tuple except the all-(n-1) one. f is the
    k-ary row indicator of sigma and g the (d+1)-ary prevailing-value
    operation.
    """
    if n < 3 or d < 3:
        raise ValueError(f"thm3 construction requires n >= 3 and d >= 3, got n={n}, d={d}")
    domain = Domain(n)
    sigma = Relation(domain, d, rules.thm3_sigma_tuples(n, d))
    corners = []
    for mask in range(2**d - 1):
        corners.append(tuple(n - 1 if (mask >> (d - 1 - j)) & 1 else 0 for j in range(d)))
    rho = sigma.union_tuples(corners)
    f = Operation.from_rule("thm3_f", n=n, d=d)
    g = Operation.from_rule("thm3_g", n=n, d=d)
    g.table_array()
    return ConstructionBundle("thm3", n, d, d * (n - 2), sigma, rho, f, g)


def build(name: str, n: int, d: int | None = None) -> ConstructionBundle:
    if name == "thm2":
        return build_thm2(n)
    if name == "thm3":
        if d is None:
            raise ValueError("thm3 construction needs both n and d")
        return build_thm3(n, d)
    raise ValueError(f"unknown construction {name!r}")


def indicator_sigma_of(op: Operation):
    """Sigma elements backing an indicator rule operation, else None."""
    if op.rule is None:
        return None
    return rules.indicator_sigma(op.rule)


def indicator_preserves(bundle: ConstructionBundle, rel: Relation) -> PreservationResult:
    """Preservation verdict for the bundle's indicator f against rel,
    equivalent to the exhaustive check but without enumerating
    |rel|**k selections.

    rel must be a subrelation of bundle.rho. The result's ``achieved``
    field carries the full set of output columns f can reach on rel.
    """
    sigma_elems = indicator_sigma_of(bundle.f)
    if sigma_elems is None:
        raise ValueError("bundle's f is not a recognized indicator rule")
    if rel.domain != bundle.rho.domain or rel.arity != bundle.rho.arity:
        raise ValueError("rel must live on the same domain and arity as rho")
    if not rel.is_subset(bundle.rho):
        raise ValueError("rel must be a subrelation of the bundle's rho")
    return _indicator_scan(sigma_elems, bundle.n, rel)


def _indicator_scan(sigma_elems, n: int, rel: Relation) -> PreservationResult:
    start = time.perf_counter()
    l = rel.arity
    if l > MAX_INDICATOR_ARITY:
        raise GuardExceededError(f"indicator checker capped at arity {MAX_INDICATOR_ARITY}")
    k = len(sigma_elems)
    m = len(rel)
    space = m**k
    if m == 0:
        return PreservationResult(True, None, "indicator", 0, time.perf_counter() - start, ())

    full = (1 << (l * l)) - 1
    states = {full: None}
    # Per-step backpointers: mask -> (previous mask, chosen tuple index).
    trail = []
    for t in sigma_elems:
        effects = {}
        for ridx, r in enumerate(rel.tuples):
            e = 0
            for i in range(l):
                ti = t[i]
                base = i * l
                for j in range(l):
                    if r[j] == ti:
                        e |= 1 << (base + j)
            if e not in effects:
                effects[e] = ridx
        back = {}
        for mask in states:
            for e, ridx in effects.items():
                nm = mask & e
                if nm not in back:
                    back[nm] = (mask, ridx)
        if len(back) > _MAX_STATES:
            raise GuardExceededError("indicator state space exceeded its cap")
        trail.append(back)
        states = back

    col_masks = [0] * l
    for j in range(l):
        for i in range(l):
            col_masks[j] |= 1 << (i * l + j)

    patterns = {}
    for mask in states:
        pat = tuple(n - 1 if mask & col_masks[j] else 0 for j in range(l))
        patterns.setdefault(pat, mask)

    achieved = tuple(sorted(patterns))
    violations = [pat for pat in achieved if pat not in rel]
    if not violations:
        return PreservationResult(
            True, None, "indicator", space, time.perf_counter() - start, achieved
        )

    final_mask = patterns[violations[0]]
    selection = []
    mask = final_mask
    for back in reversed(trail):
        prev, ridx = back[mask]
        selection.append(rel.tuples[ridx])
        mask = prev
    selection.reverse()
    witness = SelectionWitness(columns=tuple(selection), output=violations[0])
    return PreservationResult(
        False, witness, "indicator", space, time.perf_counter() - start, achieved
    )


def replay_witness(op: Operation, witness: SelectionWitness) -> tuple:
    """Re-evaluate a selection witness through plain evaluation."""
    k = op.arity
    if len(witness.columns) != k:
        raise ValueError(f"witness has {len(witness.columns)} columns, expected {k}")
    l = len(witness.output)
    out = tuple(
        evaluate(op, tuple(witness.columns[s][j] for s in range(k))) for j in range(l)
    )
    return out
