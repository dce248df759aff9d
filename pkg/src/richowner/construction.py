"""Graph construction pipeline: random build, prefix merge, edge splitting.

The pipeline builds a random graph at right width k, verifies the prefix
edge-density property on a configurable family of left sets, retries with a
fresh seed on failure, and finally splits every edge through residue
fingerprints.  Exhaustive search over all graphs is replaced by
build-verify-retry, which gives the same guarantee at this scale in
feasible time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .crt import primes_first
from .graphs import (
    TABLE_CAP,
    GraphError,
    GraphParams,
    LabeledBipartiteGraph,
    MergedGraph,
    SeededGraph,
    SplitGraph,
    TableGraph,
)
from .rng import derive_seed


class ConstructionError(RuntimeError):
    """Verification kept failing; carries the worst observed violation."""

    def __init__(self, message: str, worst_violation=None, report=None):
        super().__init__(message)
        self.worst_violation = worst_violation
        self.report = report


def next_pow2(x: int) -> int:
    if x < 1:
        return 1
    return 1 << (x - 1).bit_length()


def required_left_degree(n: int, epsilon: Fraction, c: int) -> int:
    """Smallest power of two >= c*n/epsilon^2."""
    need = math.ceil(Fraction(c * n) / (Fraction(epsilon) ** 2))
    return next_pow2(need)


def build_random_graph(n: int, k: int, epsilon, c: int, seed: int) -> LabeledBipartiteGraph:
    """Random graph on L={0,1}^n, R={0,1}^k with every edge drawn uniformly.

    The left degree is the smallest power of two >= c*n/epsilon^2 so labels
    are exact-width bit strings.  Small graphs materialize as edge tables;
    larger ones stay seeded and are evaluated on demand.
    """
    epsilon = Fraction(epsilon)
    if not 1 <= k <= n:
        raise GraphError(f"need 1 <= k <= n, got k={k} n={n}")
    if not 0 < epsilon <= 1:
        raise GraphError(f"epsilon must lie in (0, 1], got {epsilon}")
    if c < 1:
        raise GraphError(f"c must be >= 1, got {c}")
    D = required_left_degree(n, epsilon, c)
    d = D.bit_length() - 1
    params = GraphParams(n=n, m=k, d=d, k=k, epsilon=epsilon, c=c)
    g = SeededGraph(n, k, d, seed, params=params)
    if (1 << n) * D <= TABLE_CAP:
        return g.to_table()
    return g


def prefix_merge(g: LabeledBipartiteGraph, m_prime: int) -> LabeledBipartiteGraph:
    """Merge right nodes sharing the length-m' prefix; degree is unchanged."""
    if m_prime < 1:
        raise GraphError(f"merge width must be >= 1, got {m_prime}")
    if m_prime > g.m:
        raise GraphError(f"merge width {m_prime} exceeds right width {g.m}")
    if m_prime == g.m:
        return g
    if isinstance(g, TableGraph):
        shift = g.m - m_prime
        return TableGraph(g.n, m_prime, g.table >> np.uint64(shift), seed=g.seed)
    return MergedGraph(g, m_prime)


def split_count(n: int, s: int, delta: Fraction) -> int:
    """Number of new edges per old edge: ell = ceil((1/delta) * s * n)."""
    return math.ceil(Fraction(s * n) / Fraction(delta))


def split_edges(g: LabeledBipartiteGraph, s: int, delta) -> SplitGraph:
    """Fan each edge (x, z) out to ell residue-fingerprinted edges."""
    delta = Fraction(delta)
    if s < 1:
        raise GraphError(f"split threshold must be >= 1, got {s}")
    if not 0 < delta <= 1:
        raise GraphError(f"delta must lie in (0, 1], got {delta}")
    ell = split_count(g.n, s, delta)
    return SplitGraph(g, primes_first(ell), s=s, delta=delta)


@dataclass
class ConstructionReport:
    n: int
    k: int
    delta: Fraction
    epsilon: Fraction
    D: int
    ell: int
    gamma: int
    retries: int
    verified_B_count: int
    worst_violation: Optional[Fraction] = None
    attempts: list = field(default_factory=list)

    def as_record(self) -> str:
        """Flat key=value record, one field per line."""
        worst = "" if self.worst_violation is None else str(self.worst_violation)
        fields = {
            "n": self.n,
            "k": self.k,
            "delta": self.delta,
            "epsilon": self.epsilon,
            "D": self.D,
            "ell": self.ell,
            "gamma": self.gamma,
            "retries": self.retries,
            "verified_B_count": self.verified_B_count,
            "worst_violation": worst,
        }
        return "\n".join(f"{k}={v}" for k, v in fields.items())


def construct_rich_owner_graph(
    n: int,
    k: int,
    delta,
    seed: int,
    max_retries: int = 10,
    c: int = 4,
    family=None,
    builder: Optional[Callable] = None,
) -> tuple[SplitGraph, ConstructionReport]:
    """Full pipeline: random graph at width k, verify, retry, then split.

    epsilon is derived as delta^2/2 so that delta = sqrt(2*epsilon).  The
    per-edge split threshold is s = ceil((2/delta^2) * D), the worst-case
    in-regime congestion of a verified graph.  Returns the split graph and
    a report recording the overhead gamma = m - k and verification stats.

    Retries draw fresh derived seeds; the first verified attempt (lowest
    retry index) wins, so fanning attempts across workers would give the
    same result.
    """
    from .verification import BFamily, check_prefix_extractor

    delta = Fraction(delta)
    if not 0 < delta <= 1:
        raise GraphError(f"delta must lie in (0, 1], got {delta}")
    if not 1 <= k <= n:
        raise GraphError(f"need 1 <= k <= n, got k={k} n={n}")
    epsilon = delta * delta / 2
    build = builder or build_random_graph
    if family is None:
        family = BFamily.default_for(n, k, seed=derive_seed(seed, "verify-family"))

    worst = None
    attempts = []
    for attempt in range(max_retries + 1):
        g = build(n, k, epsilon, c, derive_seed(seed, "build", attempt))
        report = check_prefix_extractor(g, epsilon, family)
        attempts.append((attempt, report.passed, report.worst_error))
        if report.passed:
            D = g.degree
            s = math.ceil(Fraction(2) / (delta * delta) * D)
            split = split_edges(g, s, delta)
            gamma = split.m - k
            split.params = GraphParams(
                n=n, m=split.m, d=None, k=k, delta=delta, epsilon=epsilon,
                c=c, gamma=gamma,
            )
            return split, ConstructionReport(
                n=n, k=k, delta=delta, epsilon=epsilon, D=D, ell=split.ell,
                gamma=gamma, retries=attempt, verified_B_count=report.checked,
                worst_violation=report.worst_error, attempts=attempts,
            )
        if worst is None or (report.worst_error is not None and report.worst_error > worst):
            worst = report.worst_error
    raise ConstructionError(
        f"verification failed on {max_retries + 1} attempts (worst violation {worst})",
        worst_violation=worst,
    )
