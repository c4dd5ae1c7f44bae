"""Named operation rules for the lower-bound constructions.

Rules keep the big indicator operations unmaterialized: the 2n-ary
indicator on an n-element domain would need n**(2n) table entries
(hopeless to store for n >= 6) while its rule form is two tuple
comparisons. Each rule is identified by name plus integer parameters,
which is also the serialized wire format.

Rule ids:

    thm2_f  {n}     2n-ary indicator of the rows of the 2n-element sigma
    thm2_g  {n}     ternary "prevailing value, else floor-to-zero max"
    thm3_f  {n, d}  d(n-2)-ary indicator of the rows of the d-column sigma
    thm3_g  {n, d}  (d+1)-ary generalization of thm2_g
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RuleSpec:
    """A named rule plus its integer parameters (normalized, hashable)."""

    name: str
    params: tuple

    @classmethod
    def make(cls, name: str, params: dict) -> "RuleSpec":
        if name not in _REGISTRY:
            raise ValueError(f"unknown rule {name!r}; known: {sorted(_REGISTRY)}")
        entry = _REGISTRY[name]
        expected = set(entry.param_names)
        given = set(params)
        if given != expected:
            raise ValueError(
                f"rule {name!r} takes parameters {sorted(expected)}, got {sorted(given)}"
            )
        values = {key: int(params[key]) for key in params}
        entry.validate(values)
        return cls(name, tuple(sorted(values.items())))

    def as_dict(self) -> dict:
        return dict(self.params)


@dataclass(frozen=True)
class _Entry:
    param_names: tuple
    validate: callable
    signature: callable  # params -> (domain size, arity)
    evaluator: callable  # params -> callable(args) -> int
    table_builder: callable  # params -> np.ndarray


def _validate_thm2(p):
    if p["n"] < 4:
        raise ValueError(f"construction requires n >= 4, got n={p['n']}")


def _validate_thm3(p):
    if p["n"] < 3 or p["d"] < 3:
        raise ValueError(
            f"construction requires n >= 3 and d >= 3, got n={p['n']}, d={p['d']}"
        )


def diagonal_tuples(x: int, l: int) -> list:
    """The l tuples with x at one coordinate and 0 elsewhere (deduplicated)."""
    seen = set()
    out = []
    for pos in range(l):
        t = tuple(x if j == pos else 0 for j in range(l))
        if t not in seen:
            seen.add(t)
            out.append(t)
    return out


def thm2_sigma_tuples(n: int) -> list:
    """The 2n-element binary sigma, in canonical (lexicographic) order."""
    tuples = set()
    for x in range(1, n):
        tuples.update(diagonal_tuples(x, 2))
    tuples.update({(2, 1), (1, 2)})
    return sorted(tuples)


def thm3_sigma_tuples(n: int, d: int) -> list:
    """The d(n-2)-element d-ary sigma, in canonical order."""
    tuples = set()
    for x in range(1, n - 1):
        tuples.update(diagonal_tuples(x, d))
    return sorted(tuples)


def sigma_rows(tuples) -> list:
    """Rows of the matrix whose columns are the given tuples in order."""
    if not tuples:
        return []
    arity = len(tuples[0])
    return [tuple(t[i] for t in tuples) for i in range(arity)]


def prevailing_value(args):
    """The value covering all but at most one entry of ``args``, else None."""
    first = args[0]
    if all(x == first for x in args[1:]):
        return first
    for candidate in (first, args[1]):
        if sum(1 for x in args if x != candidate) == 1:
            return candidate
    return None


def _gstar(args):
    return 0 if 0 in args else max(args)


def _make_g_evaluator(n):
    def g(args):
        maj = prevailing_value(args)
        if maj is not None:
            return maj
        return _gstar(args)

    return g


def _make_f_evaluator(rows, n):
    row_set = frozenset(rows)

    def f(args):
        return n - 1 if tuple(args) in row_set else 0

    return f


def _row_index(row, n):
    idx = 0
    for x in row:
        idx = idx * n + x
    return idx


def _indicator_table(rows, n, arity):
    table = np.zeros(n**arity, dtype=np.uint8 if n <= 256 else np.int64)
    for row in rows:
        table[_row_index(row, n)] = n - 1
    return table


def _generic_table(evaluator, n, arity):
    values = [evaluator(args) for args in itertools.product(range(n), repeat=arity)]
    return np.array(values, dtype=np.uint8 if n <= 256 else np.int64)


def _thm2_f_rows(p):
    return sigma_rows(thm2_sigma_tuples(p["n"]))


def _thm3_f_rows(p):
    return sigma_rows(thm3_sigma_tuples(p["n"], p["d"]))


_REGISTRY = {
    "thm2_f": _Entry(
        param_names=("n",),
        validate=_validate_thm2,
        signature=lambda p: (p["n"], 2 * p["n"]),
        evaluator=lambda p: _make_f_evaluator(_thm2_f_rows(p), p["n"]),
        table_builder=lambda p: _indicator_table(_thm2_f_rows(p), p["n"], 2 * p["n"]),
    ),
    "thm2_g": _Entry(
        param_names=("n",),
        validate=_validate_thm2,
        signature=lambda p: (p["n"], 3),
        evaluator=lambda p: _make_g_evaluator(p["n"]),
        table_builder=lambda p: _generic_table(_make_g_evaluator(p["n"]), p["n"], 3),
    ),
    "thm3_f": _Entry(
        param_names=("n", "d"),
        validate=_validate_thm3,
        signature=lambda p: (p["n"], p["d"] * (p["n"] - 2)),
        evaluator=lambda p: _make_f_evaluator(_thm3_f_rows(p), p["n"]),
        table_builder=lambda p: _indicator_table(
            _thm3_f_rows(p), p["n"], p["d"] * (p["n"] - 2)
        ),
    ),
    "thm3_g": _Entry(
        param_names=("n", "d"),
        validate=_validate_thm3,
        signature=lambda p: (p["n"], p["d"] + 1),
        evaluator=lambda p: _make_g_evaluator(p["n"]),
        table_builder=lambda p: _generic_table(
            _make_g_evaluator(p["n"]), p["n"], p["d"] + 1
        ),
    ),
}


def known_rules():
    return sorted(_REGISTRY)


def signature(spec: RuleSpec):
    """(domain size, arity) of the rule instance."""
    return _REGISTRY[spec.name].signature(spec.as_dict())


def evaluator(spec: RuleSpec):
    return _REGISTRY[spec.name].evaluator(spec.as_dict())


def build_table(spec: RuleSpec) -> np.ndarray:
    return _REGISTRY[spec.name].table_builder(spec.as_dict())


def indicator_rows(spec: RuleSpec):
    """Rows of sigma for the indicator rules, None for other rules."""
    if spec.name == "thm2_f":
        return _thm2_f_rows(spec.as_dict())
    if spec.name == "thm3_f":
        return _thm3_f_rows(spec.as_dict())
    return None


def indicator_sigma(spec: RuleSpec):
    """Sigma elements (canonical order) for the indicator rules, else None."""
    if spec.name == "thm2_f":
        return thm2_sigma_tuples(spec.as_dict()["n"])
    if spec.name == "thm3_f":
        p = spec.as_dict()
        return thm3_sigma_tuples(p["n"], p["d"])
    return None
