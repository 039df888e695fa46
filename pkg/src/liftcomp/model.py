"""Factor-graph data model and exact joint-potential arithmetic.

A factor graph here is a bipartite structure of named random variables
(each with an ordered range of value labels) and named factors (each an
ordered argument list plus a dense table of strictly positive reals).
The joint potential of a full assignment is the product of the factor
entries it selects; normalizing by the partition function turns that
into a probability distribution.

Tables are stored as read-only float64 arrays shaped by the argument
range sizes, C-order, so flat row-major listings have the last argument
varying fastest. All enumeration-based operations refuse to run once
the joint state count exceeds a cap (default 2**24 states) because they
materialize one float per state.

Instances are immutable after construction and safe to share between
threads; every operation in this module is a pure function.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, replace
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import EnumerationCapError, InvariantError

__all__ = [
    "DEFAULT_ENUM_CAP",
    "ENUM_CAP_ENV_VAR",
    "Assignment",
    "RandomVariable",
    "Factor",
    "FactorGraph",
    "Evidence",
    "resolve_cap",
    "eval_joint",
    "joint_table",
    "partition_function",
    "joint_probability",
    "all_assignments",
    "fg_equal",
    "replace_tables",
]

DEFAULT_ENUM_CAP = 2**24
ENUM_CAP_ENV_VAR = "LIFTCOMP_ENUM_CAP"

# An assignment maps RV names to range labels.
Assignment = Mapping[str, str]


def resolve_cap(cap: int | None = None) -> int:
    """Effective enumeration cap: explicit argument, else environment, else default."""
    if cap is not None:
        if cap < 1:
            raise InvariantError(f"enumeration cap must be positive, got {cap}")
        return cap
    env = os.environ.get(ENUM_CAP_ENV_VAR)
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            raise InvariantError(
                f"{ENUM_CAP_ENV_VAR} must be an integer, got {env!r}"
            ) from None
        if value < 1:
            raise InvariantError(f"{ENUM_CAP_ENV_VAR} must be positive, got {value}")
        return value
    return DEFAULT_ENUM_CAP


@dataclass(frozen=True)
class RandomVariable:
    """Named variable with an ordered range of at least two distinct labels.

    Range order is part of model identity: table indexing depends on it.
    """

    name: str
    range: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "range", tuple(self.range))
        if not self.name:
            raise InvariantError("random variable name must be non-empty")
        if len(self.range) < 2:
            raise InvariantError(
                f"rv {self.name!r}: range needs at least 2 labels, got {len(self.range)}"
            )
        if len(set(self.range)) != len(self.range):
            raise InvariantError(f"rv {self.name!r}: range labels are not distinct")

    @property
    def size(self) -> int:
        return len(self.range)

    def index_of(self, label: str) -> int:
        try:
            return self.range.index(label)
        except ValueError:
            raise InvariantError(
                f"label {label!r} not in range of rv {self.name!r}"
            ) from None


@dataclass(frozen=True, eq=False)
class Factor:
    """Named factor: ordered argument RVs plus a dense positive table.

    The table must arrive shaped (one axis per argument, last axis fastest
    in the flat row-major reading). Entries are strictly positive finite
    float64; the array is frozen against writes on construction.
    """

    name: str
    args: tuple[str, ...]
    table: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))
        if not self.name:
            raise InvariantError("factor name must be non-empty")
        if len(set(self.args)) != len(self.args):
            raise InvariantError(f"factor {self.name!r}: argument RVs are not distinct")
        table = np.asarray(self.table, dtype=np.float64)
        if table.ndim != len(self.args):
            raise InvariantError(
                f"factor {self.name!r}: table has {table.ndim} axes "
                f"for {len(self.args)} arguments"
            )
        if not np.all(np.isfinite(table)) or not np.all(table > 0.0):
            raise InvariantError(
                f"factor {self.name!r}: table entries must be strictly positive and finite"
            )
        table = np.ascontiguousarray(table)
        table.flags.writeable = False
        object.__setattr__(self, "table", table)

    @property
    def arity(self) -> int:
        return len(self.args)

    def flat(self) -> np.ndarray:
        return self.table.reshape(-1)


@dataclass(frozen=True, eq=False)
class FactorGraph:
    """Immutable factor graph; edges are implicit in factor argument lists."""

    rvs: tuple[RandomVariable, ...]
    factors: tuple[Factor, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "rvs", tuple(self.rvs))
        object.__setattr__(self, "factors", tuple(self.factors))
        rv_index: dict[str, RandomVariable] = {}
        for rv in self.rvs:
            if rv.name in rv_index:
                raise InvariantError(f"duplicate rv name {rv.name!r}")
            rv_index[rv.name] = rv
        factor_index: dict[str, Factor] = {}
        touched: set[str] = set()
        for f in self.factors:
            if f.name in factor_index:
                raise InvariantError(f"duplicate factor name {f.name!r}")
            expected = []
            for arg in f.args:
                if arg not in rv_index:
                    raise InvariantError(
                        f"factor {f.name!r} references undeclared rv {arg!r}"
                    )
                expected.append(rv_index[arg].size)
            if f.table.shape != tuple(expected):
                raise InvariantError(
                    f"factor {f.name!r}: table shape {f.table.shape} does not match "
                    f"argument range sizes {tuple(expected)}"
                )
            factor_index[f.name] = f
            touched.update(f.args)
        isolated = [rv.name for rv in self.rvs if rv.name not in touched]
        if isolated:
            warnings.warn(
                f"isolated rvs (uniform marginal): {', '.join(isolated)}",
                stacklevel=2,
            )
        object.__setattr__(self, "_rv_index", rv_index)
        object.__setattr__(self, "_factor_index", factor_index)
        object.__setattr__(
            self, "_rv_pos", {rv.name: i for i, rv in enumerate(self.rvs)}
        )

    def rv(self, name: str) -> RandomVariable:
        try:
            return self._rv_index[name]  # type: ignore[attr-defined]
        except KeyError:
            raise InvariantError(f"unknown rv {name!r}") from None

    def factor(self, name: str) -> Factor:
        try:
            return self._factor_index[name]  # type: ignore[attr-defined]
        except KeyError:
            raise InvariantError(f"unknown factor {name!r}") from None

    def has_rv(self, name: str) -> bool:
        return name in self._rv_index  # type: ignore[attr-defined]

    def rv_position(self, name: str) -> int:
        self.rv(name)
        return self._rv_pos[name]  # type: ignore[attr-defined]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(rv.size for rv in self.rvs)

    def state_count(self) -> int:
        return math.prod(rv.size for rv in self.rvs)

    def arg_ranges(self, factor: Factor) -> tuple[tuple[str, ...], ...]:
        return tuple(self.rv(a).range for a in factor.args)


@dataclass(frozen=True)
class Evidence:
    """Observed (rv, label) pairs; an RV may appear at most once."""

    items: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        items = tuple((str(rv), str(val)) for rv, val in self.items)
        object.__setattr__(self, "items", items)
        names = [rv for rv, _ in items]
        if len(set(names)) != len(names):
            raise InvariantError("evidence assigns some rv twice")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str]) -> "Evidence":
        return cls(tuple(mapping.items()))

    def as_dict(self) -> dict[str, str]:
        return dict(self.items)

    def __bool__(self) -> bool:
        return bool(self.items)

    def validate_against(self, fg: FactorGraph) -> None:
        """Check every observed rv exists and every label is in range."""
        for rv_name, label in self.items:
            fg.rv(rv_name).index_of(label)


def _assignment_indices(fg: FactorGraph, a: Assignment) -> dict[str, int]:
    indices: dict[str, int] = {}
    for rv in fg.rvs:
        if rv.name not in a:
            raise InvariantError(f"assignment is missing rv {rv.name!r}")
        indices[rv.name] = rv.index_of(a[rv.name])
    return indices


def eval_joint(fg: FactorGraph, a: Assignment) -> float:
    """Joint potential of a full assignment: the product of selected entries."""
    indices = _assignment_indices(fg, a)
    value = 1.0
    for f in fg.factors:
        value *= float(f.table[tuple(indices[arg] for arg in f.args)])
    return value


def joint_table(fg: FactorGraph, cap: int | None = None) -> np.ndarray:
    """Dense joint-potential array, one axis per RV in declaration order.

    Built by broadcast-multiplying every factor table into the full joint
    shape. Refuses to allocate past the enumeration cap.
    """
    n_states = fg.state_count()
    limit = resolve_cap(cap)
    if n_states > limit:
        raise EnumerationCapError(
            f"joint state count {n_states} exceeds enumeration cap {limit}"
        )
    joint = np.ones(fg.shape, dtype=np.float64)
    n = len(fg.rvs)
    for f in fg.factors:
        axes = [fg.rv_position(arg) for arg in f.args]
        expand = [1] * n
        for axis, size in zip(axes, f.table.shape):
            expand[axis] = size
        # ascontiguous view aligned to the global axis order, then broadcast
        order = np.argsort(axes)
        moved = np.transpose(f.table, tuple(order))
        dest = sorted(axes)
        joint *= moved.reshape(
            [expand[i] if i in dest else 1 for i in range(n)]
        )
    return joint


def partition_function(fg: FactorGraph, cap: int | None = None) -> float:
    """Z: the sum of the joint potential over every full assignment."""
    return float(joint_table(fg, cap).sum())


def joint_probability(fg: FactorGraph, a: Assignment, cap: int | None = None) -> float:
    """Normalized joint potential of one assignment."""
    return eval_joint(fg, a) / partition_function(fg, cap)


def all_assignments(fg: FactorGraph) -> Iterator[dict[str, str]]:
    """Iterate every full assignment in row-major order (last RV fastest)."""
    names = [rv.name for rv in fg.rvs]
    for idx in np.ndindex(*fg.shape):
        yield {name: fg.rvs[i].range[idx[i]] for i, name in enumerate(names)}


def fg_equal(a: FactorGraph, b: FactorGraph, *, bit_exact: bool = True) -> bool:
    """Structural equality: same RVs, ranges, factors, argument order, tables.

    With bit_exact the tables must match exactly, otherwise to 1e-12 relative.
    """
    if [(rv.name, rv.range) for rv in a.rvs] != [(rv.name, rv.range) for rv in b.rvs]:
        return False
    if len(a.factors) != len(b.factors):
        return False
    for fa, fb in zip(a.factors, b.factors):
        if fa.name != fb.name or fa.args != fb.args:
            return False
        if bit_exact:
            if not np.array_equal(fa.table, fb.table):
                return False
        elif not np.allclose(fa.table, fb.table, rtol=1e-12, atol=0.0):
            return False
    return True


def replace_tables(fg: FactorGraph, tables: Mapping[str, np.ndarray]) -> FactorGraph:
    """Copy of fg with some factor tables swapped; structure untouched."""
    known = {f.name for f in fg.factors}
    unknown = set(tables) - known
    if unknown:
        raise InvariantError(f"no such factors: {sorted(unknown)}")
    factors = tuple(
        replace(f, table=tables[f.name]) if f.name in tables else f
        for f in fg.factors
    )
    return FactorGraph(fg.rvs, factors)
