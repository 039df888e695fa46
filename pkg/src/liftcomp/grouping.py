"""Greedy grouping of pairwise eps-equivalent factors and mean updates.

phase1_group walks the factors in input order. The first factor opens a
group; each later factor collects every existing group it is
eps-equivalent to under a single alignment that must hold against EVERY
member (checked on tables composed into the group frame, i.e. the frame
of the group's first member). Among the candidates it joins the one
minimizing the summed squared deviation, ties broken by lowest group
index; with no candidate it opens a new group. The result is order
dependent by design; callers must feed factors in model order.

mean_factor is the update step: the entrywise arithmetic mean of the
aligned tables. A group of bit-identical tables is returned unchanged
(float addition of k copies then division by k is not always exact, and
identity groups must stay bit-exact).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import permutations
from typing import Sequence

import numpy as np

from .errors import ArityCapError, InvariantError
from .equivalence import (
    ARITY_CAP,
    Alignment,
    aligned_table,
    check_epsilon,
    eps_equiv_arrays,
    identity_alignment,
)
from .model import Factor

__all__ = ["GroupMember", "Grouping", "phase1_group", "mean_factor", "mean_of_tables"]


@dataclass(frozen=True)
class GroupMember:
    """Factor name plus the alignment viewing its table in the group frame."""

    factor: str
    align: Alignment


@dataclass(frozen=True)
class Grouping:
    """Ordered partition of factors into groups of pairwise eps-equivalent members."""

    groups: tuple[tuple[GroupMember, ...], ...]

    def group_index(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for gi, group in enumerate(self.groups):
            for member in group:
                out[member.factor] = gi
        return out

    def alignments(self) -> dict[str, Alignment]:
        return {m.factor: m.align for g in self.groups for m in g}

    def sizes(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.groups)


def _group_alignment(
    candidate: Factor,
    rep_shape: tuple[int, ...],
    member_tables: list[np.ndarray],
    eps: float,
) -> tuple[Alignment, float] | None:
    """First lexicographic permutation aligning `candidate` to every member.

    Returns (alignment, summed squared deviation) or None. member_tables
    are already in the group frame, so composition with stored alignments
    reduces to direct entrywise comparison.
    """
    if candidate.arity != len(rep_shape):
        return None
    if candidate.arity > ARITY_CAP:
        raise ArityCapError(
            f"arity {candidate.arity} exceeds permutation search cap {ARITY_CAP}"
        )
    shape2 = candidate.table.shape
    for perm in permutations(range(candidate.arity)):
        if any(shape2[j] != rep_shape[perm[j]] for j in range(len(perm))):
            continue
        aligned = aligned_table(candidate.table, perm)
        if all(eps_equiv_arrays(mt, aligned, eps) for mt in member_tables):
            total = 0.0
            for mt in member_tables:
                diff = mt - aligned
                total += float(np.sum(diff * diff))
            return perm, total
    return None


def phase1_group(factors: Sequence[Factor], eps: float) -> Grouping:
    """Partition factors into greedy groups of pairwise eps-equivalent members."""
    eps = check_epsilon(eps)
    groups: list[list[GroupMember]] = []
    frames: list[tuple[int, ...]] = []          # group-frame table shape
    aligned: list[list[np.ndarray]] = []        # member tables in the group frame
    for f in factors:
        best: tuple[float, int, Alignment] | None = None
        for gi, shape in enumerate(frames):
            found = _group_alignment(f, shape, aligned[gi], eps)
            if found is None:
                continue
            perm, total = found
            if best is None or total < best[0]:
                best = (total, gi, perm)
        if best is None:
            groups.append([GroupMember(f.name, identity_alignment(f.arity))])
            frames.append(f.table.shape)
            aligned.append([f.table])
        else:
            _, gi, perm = best
            groups[gi].append(GroupMember(f.name, perm))
            aligned[gi].append(aligned_table(f.table, perm))
    return Grouping(tuple(tuple(g) for g in groups))


def mean_of_tables(tables: Sequence[np.ndarray]) -> np.ndarray:
    """Entrywise arithmetic mean; bit-exact passthrough for identical tables."""
    if not tables:
        raise InvariantError("mean of an empty group")
    first = tables[0]
    for t in tables[1:]:
        if t.shape != first.shape:
            raise InvariantError(
                f"shape mismatch in group mean: {t.shape} vs {first.shape}"
            )
    if all(np.array_equal(t, first) for t in tables[1:]):
        return first
    return np.mean(np.stack(tables, axis=0), axis=0)


def mean_factor(group: Sequence[Factor]) -> Factor:
    """Mean of already-aligned factors, named and shaped after the first member."""
    if not group:
        raise InvariantError("mean of an empty group")
    table = mean_of_tables([f.table for f in group])
    return replace(group[0], table=table)
