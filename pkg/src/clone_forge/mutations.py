"""Scripted bundle mutations used as negative controls.

Each mutation breaks exactly one certificate condition on a suitable
bundle, so a verifier that reports anything other than that single
failure is itself broken. Note that adding the all-(n-1) tuple to rho
isolates the f-vs-rho clause only on thm3 bundles: thm2's sigma
contains tuples with the value n-1, and the added tuple gives g a second
way to produce it, so condition (3) breaks there as well.
"""

from __future__ import annotations

import itertools
from dataclasses import replace

from . import rules
from .constructions import ConstructionBundle
from .core import Operation
from .relations import Relation


def with_nonconservative_g(bundle: ConstructionBundle) -> ConstructionBundle:
    """Redirect g on one non-near-unanimous input to a non-argument value."""
    g = bundle.g
    n = g.domain.size
    table = g.table_array().copy()
    for idx, args in enumerate(itertools.product(range(n), repeat=g.arity)):
        if rules.prevailing_value(args) is None and len(set(args)) < n:
            table[idx] = min(set(range(n)) - set(args))
            mutated = Operation.from_table(g.domain, g.arity, table)
            return replace(bundle, g=mutated)
    raise ValueError("no mutable input exists on this domain")


def with_dropped_sigma_element(bundle: ConstructionBundle, index: int = 0) -> ConstructionBundle:
    """Remove one element from sigma (breaks the cardinality clause)."""
    tuples = list(bundle.sigma.tuples)
    if not 0 <= index < len(tuples):
        raise ValueError(f"sigma has {len(tuples)} elements, index {index} out of range")
    del tuples[index]
    sigma = Relation(bundle.sigma.domain, bundle.sigma.arity, tuples)
    return replace(bundle, sigma=sigma)


def with_full_value_tuple(bundle: ConstructionBundle) -> ConstructionBundle:
    """Add the all-(n-1) tuple to rho (f then maps rho into rho)."""
    full = (bundle.n - 1,) * bundle.rho.arity
    return replace(bundle, rho=bundle.rho.union_tuples([full]))
