"""Epsilon-equivalence tests, argument alignment, and commutativity detection.

Two positive potentials a, b are eps-equivalent when each lies in the
other's multiplicative band: a in [b(1-eps), b(1+eps)] and
b in [a(1-eps), a(1+eps)]. Both directions are checked literally; for
eps < 1 the conjunction is the same as max(a,b)/min(a,b) <= 1+eps, which
is what makes the mean-update deviation bounds work. Boundary
comparisons carry a 1e-12 relative slack so rounded decimal inputs do
not flip on the edge. The relation is symmetric and reflexive but NOT
transitive, and no code here may assume otherwise.

Two factors are eps-equivalent when some permutation of argument
positions aligns their tables entrywise under that scalar test. The
search is exhaustive over range-compatible permutations (arity capped
at 8), returning the lexicographically smallest witness so the identity
wins whenever it is valid.

An alignment `perm` is a tuple with the meaning of Def-style
permutations: position j of the right-hand factor receives the left
factor's coordinate perm[j]. `aligned_table(t, perm)` therefore views
the right factor's table in the left factor's frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import ArityCapError, InvariantError
from .model import Factor

__all__ = [
    "REL_SLACK",
    "ARITY_CAP",
    "Alignment",
    "CommutativeSpec",
    "check_epsilon",
    "identity_alignment",
    "invert_alignment",
    "aligned_table",
    "unaligned_table",
    "aligned_args",
    "eps_equiv_potentials",
    "eps_equiv_arrays",
    "eps_equiv_factors",
    "err",
    "commutative_blocks",
]

REL_SLACK = 1e-12
ARITY_CAP = 8

Alignment = tuple[int, ...]


def check_epsilon(eps: float) -> float:
    """Validate 0 <= eps < 1; the upper bound keeps (1-eps) positive."""
    eps = float(eps)
    if not 0.0 <= eps < 1.0:
        raise InvariantError(f"epsilon must satisfy 0 <= eps < 1, got {eps}")
    return eps


def identity_alignment(arity: int) -> Alignment:
    return tuple(range(arity))


def invert_alignment(perm: Alignment) -> Alignment:
    inv = [0] * len(perm)
    for j, p in enumerate(perm):
        inv[p] = j
    return tuple(inv)


def aligned_table(table: np.ndarray, perm: Alignment) -> np.ndarray:
    """View `table` in the left frame: result[i_0..] = table[i_perm[0], ...]."""
    if len(perm) != table.ndim or sorted(perm) != list(range(table.ndim)):
        raise InvariantError(f"invalid alignment {perm} for arity {table.ndim}")
    return np.transpose(table, invert_alignment(perm))


def unaligned_table(table: np.ndarray, perm: Alignment) -> np.ndarray:
    """Inverse of aligned_table: push a left-frame table back to the member frame."""
    if len(perm) != table.ndim or sorted(perm) != list(range(table.ndim)):
        raise InvariantError(f"invalid alignment {perm} for arity {table.ndim}")
    return np.transpose(table, perm)


def aligned_args(args: tuple[str, ...], perm: Alignment) -> tuple[str, ...]:
    """Member argument names reordered into the left (representative) frame."""
    inv = invert_alignment(perm)
    return tuple(args[inv[j]] for j in range(len(args)))


def eps_equiv_potentials(a: float, b: float, eps: float) -> bool:
    """Symmetric two-sided band test on a pair of positive potentials."""
    eps = check_epsilon(eps)
    if a <= 0.0 or b <= 0.0:
        raise InvariantError("potentials must be strictly positive")
    return bool(
        a <= b * (1.0 + eps) * (1.0 + REL_SLACK)
        and a >= b * (1.0 - eps) * (1.0 - REL_SLACK)
        and b <= a * (1.0 + eps) * (1.0 + REL_SLACK)
        and b >= a * (1.0 - eps) * (1.0 - REL_SLACK)
    )


def eps_equiv_arrays(x: np.ndarray, y: np.ndarray, eps: float) -> bool:
    """Vectorized entrywise form of eps_equiv_potentials over equal-shape arrays."""
    eps = check_epsilon(eps)
    if x.shape != y.shape:
        raise InvariantError(f"shape mismatch {x.shape} vs {y.shape}")
    hi = np.maximum(x, y)
    lo = np.minimum(x, y)
    return bool(
        np.all(hi <= lo * ((1.0 + eps) * (1.0 + REL_SLACK)))
        and np.all(lo >= hi * ((1.0 - eps) * (1.0 - REL_SLACK)))
    )


def _range_compatible(shape1: tuple[int, ...], shape2: tuple[int, ...], perm: Alignment) -> bool:
    # position j of the right factor takes the left coordinate perm[j]
    return all(shape2[j] == shape1[perm[j]] for j in range(len(perm)))


def eps_equiv_factors(f1: Factor, f2: Factor, eps: float) -> Alignment | None:
    """Witness permutation aligning f2 to f1 under the entrywise test, or None.

    Permutations are tried in lexicographic order, so the identity is
    returned whenever it works. Arity above ARITY_CAP is refused rather
    than silently running a factorial search.
    """
    eps = check_epsilon(eps)
    if f1.arity != f2.arity:
        return None
    if f1.arity > ARITY_CAP:
        raise ArityCapError(
            f"arity {f1.arity} exceeds permutation search cap {ARITY_CAP}"
        )
    shape1, shape2 = f1.table.shape, f2.table.shape
    for perm in permutations(range(f1.arity)):
        if not _range_compatible(shape1, shape2, perm):
            continue
        if eps_equiv_arrays(f1.table, aligned_table(f2.table, perm), eps):
            return perm
    return None


def err(f1: Factor, f2: Factor, align: Alignment) -> float:
    """Sum of squared entrywise deviations after aligning f2 onto f1."""
    if f1.arity != f2.arity or not _range_compatible(
        f1.table.shape, f2.table.shape, align
    ):
        raise InvariantError(
            f"factors {f1.name!r} and {f2.name!r} are not shape-compatible "
            f"under alignment {align}"
        )
    diff = f1.table - aligned_table(f2.table, align)
    return float(np.sum(diff * diff))


@dataclass(frozen=True)
class CommutativeSpec:
    """Partition of a factor's argument positions into swap-closed blocks.

    Every block of size >= 2 passed the pairwise transposition test: for
    each pair of positions in the block, swapping those two table axes
    yields an eps-equivalent table. Blocks are disjoint and cover all
    positions.
    """

    factor: str
    blocks: tuple[tuple[int, ...], ...]

    def counted_candidates(self) -> tuple[tuple[int, ...], ...]:
        return tuple(b for b in self.blocks if len(b) >= 2)


def commutative_blocks(
    f: Factor,
    eps: float,
    ranges: tuple[tuple[str, ...], ...] | None = None,
) -> CommutativeSpec:
    """Greedy clique partition of positions under the pairwise swap test.

    Two positions may share a block only if their arguments have a common
    range; pass `ranges` (label tuples per position) to enforce label
    equality, otherwise equal axis sizes are the best available check.
    Pairwise transpositions rather than all block permutations: with
    eps > 0 the relation is not transitive, matching the pairwise
    grouping stance used everywhere else.
    """
    eps = check_epsilon(eps)
    n = f.arity
    if ranges is not None and len(ranges) != n:
        raise InvariantError(f"ranges arity {len(ranges)} != factor arity {n}")

    def compatible(i: int, j: int) -> bool:
        if ranges is not None:
            return ranges[i] == ranges[j]
        return f.table.shape[i] == f.table.shape[j]

    def swap_ok(i: int, j: int) -> bool:
        return compatible(i, j) and eps_equiv_arrays(
            f.table, np.swapaxes(f.table, i, j), eps
        )

    blocks: list[list[int]] = []
    placed = [False] * n
    for i in range(n):
        if placed[i]:
            continue
        block = [i]
        placed[i] = True
        for j in range(i + 1, n):
            if not placed[j] and all(swap_ok(j, b) for b in block):
                block.append(j)
                placed[j] = True
        blocks.append(block)
    return CommutativeSpec(f.name, tuple(tuple(b) for b in blocks))
