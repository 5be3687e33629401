# Copyright (c) 2025, ahmad mohammad and contributors
# For license information, please see license.txt

"""Minimal T- and P-semiflows by Farkas elimination over the integers"""

from dataclasses import dataclass
from math import gcd
from functools import reduce

import numpy as np

from ssp_supervisor.core.exceptions import SemiflowCapError, StructuralError
from ssp_supervisor.core.log import get_logger

logger = get_logger("semiflows")

DEFAULT_BASIS_CAP = 10_000
T_KIND = "T"
P_KIND = "P"


@dataclass(frozen=True)
class Semiflow:
    kind: str
    coefficients: tuple

    @property
    def support(self):
        return frozenset(i for i, c in enumerate(self.coefficients) if c)

    def support_names(self, names):
        return tuple(names[i] for i, c in enumerate(self.coefficients) if c)

    def as_dict(self, names):
        return {names[i]: c for i, c in enumerate(self.coefficients) if c}

    def __getitem__(self, index):
        return self.coefficients[index]


@dataclass(frozen=True)
class CoverageResult:
    ok: bool
    witness: tuple

    def __bool__(self):
        return self.ok


def _normalise(row):
    divisor = reduce(gcd, (abs(int(v)) for v in row), 0)
    return row // divisor if divisor > 1 else row


def _prune(rows, offset):
    """Drop duplicates and rows whose support strictly contains another row's support"""
    unique = {}
    for row in rows:
        unique.setdefault(tuple(int(v) for v in row), row)
    rows = list(unique.values())
    supports = [frozenset(np.flatnonzero(row[offset:])) for row in rows]
    keep = []
    for i, s in enumerate(supports):
        if not any(other < s for k, other in enumerate(supports) if k != i):
            keep.append(rows[i])
    return keep


def _farkas(matrix, cap):
    """Minimal-support nonnegative x with x @ matrix = 0"""
    n, k = matrix.shape
    rows = list(np.hstack([matrix.astype(np.int64), np.eye(n, dtype=np.int64)]))
    for j in range(k):
        zero = [r for r in rows if r[j] == 0]
        positive = [r for r in rows if r[j] > 0]
        negative = [r for r in rows if r[j] < 0]
        combined = [_normalise(-b[j] * a + a[j] * b) for a in positive for b in negative]
        rows = _prune(zero + combined, k)
        if len(rows) > cap:
            raise SemiflowCapError(
                f"Semiflow basis grew beyond {cap} rows while eliminating column {j + 1} of {k}",
                partial_rows=len(rows),
            )
    vectors = {tuple(int(v) for v in _normalise(r[k:])) for r in rows}
    supports = {v: frozenset(i for i, c in enumerate(v) if c) for v in vectors}
    minimal = [v for v in vectors if not any(supports[w] < supports[v] for w in vectors)]
    return sorted(minimal, reverse=True)


def minimal_t_semiflows(net, cap=DEFAULT_BASIS_CAP):
    """All minimal-support T-semiflows, gcd 1, in descending lexicographic order"""
    vectors = _farkas(net.incidence.T, cap)
    for v in vectors:
        if np.any(net.incidence @ np.asarray(v, dtype=np.int64)):
            raise StructuralError(f"Computed vector {v} is not a T-semiflow")
    logger.debug(f"{len(vectors)} minimal T-semiflows over {len(net.transitions)} transitions")
    return [Semiflow(T_KIND, v) for v in vectors]


def minimal_p_semiflows(net, cap=DEFAULT_BASIS_CAP):
    vectors = _farkas(net.incidence, cap)
    for v in vectors:
        if np.any(np.asarray(v, dtype=np.int64) @ net.incidence):
            raise StructuralError(f"Computed vector {v} is not a P-semiflow")
    logger.debug(f"{len(vectors)} minimal P-semiflows over {len(net.places)} places")
    return [Semiflow(P_KIND, v) for v in vectors]


def _coverage(semiflows, size):
    witness = [0] * size
    for sf in semiflows:
        for i, c in enumerate(sf.coefficients):
            witness[i] += c
    return CoverageResult(size > 0 and all(witness), tuple(witness))


def is_consistent(net, cap=DEFAULT_BASIS_CAP):
    """A strictly positive T-semiflow exists; the witness is the sum of the minimal ones"""
    return _coverage(minimal_t_semiflows(net, cap), len(net.transitions))


def is_conservative(net, cap=DEFAULT_BASIS_CAP):
    return _coverage(minimal_p_semiflows(net, cap), len(net.places))


def semiflow_from_dict(kind, names, coefficients):
    index = {n: i for i, n in enumerate(names)}
    vector = [0] * len(names)
    for name, c in coefficients.items():
        vector[index[name]] = c
    return Semiflow(kind, tuple(vector))


def format_semiflow(semiflow, names, label=None):
    terms = [n if c == 1 else f"{c}*{n}" for n, c in semiflow.as_dict(names).items()]
    body = " + ".join(terms) or "0"
    return f"{label} = {body}" if label else body
