"""Shared fixtures: worked-example models and seeded random model generators."""

from __future__ import annotations

import numpy as np
import pytest

from liftcomp import Factor, FactorGraph, RandomVariable

HL = ("high", "low")


def sales_model() -> FactorGraph:
    """Two sales variables tied to one revenue variable by near-equal tables."""
    rvs = (
        RandomVariable("SalA", HL),
        RandomVariable("SalB", HL),
        RandomVariable("Rev", HL),
    )
    phi1 = Factor("phi1", ("SalA", "Rev"), np.array([[0.75, 0.33], [0.48, 0.22]]))
    phi2 = Factor("phi2", ("SalB", "Rev"), np.array([[0.8, 0.3], [0.5, 0.2]]))
    return FactorGraph(rvs, (phi1, phi2))


def phi3() -> Factor:
    """Third sales table: within tolerance of phi2 but not of phi1 at 0.1."""
    return Factor("phi3", ("SalC", "Rev"), np.array([[0.84, 0.31], [0.51, 0.22]]))


def sales_model_three() -> FactorGraph:
    base = sales_model()
    rvs = base.rvs + (RandomVariable("SalC", HL),)
    return FactorGraph(rvs, base.factors + (phi3(),))


def counting_model() -> FactorGraph:
    """One factor symmetric in its last two arguments; compacts to 6 rows."""
    rvs = (
        RandomVariable("Rev", HL),
        RandomVariable("ComA", HL),
        RandomVariable("ComB", HL),
    )
    table = np.array([1.0, 2.0, 2.0, 3.0, 4.0, 5.0, 5.0, 6.0]).reshape(2, 2, 2)
    return FactorGraph(rvs, (Factor("phi1", ("Rev", "ComA", "ComB"), table),))


def random_model(
    rng: np.random.Generator,
    max_rvs: int = 10,
    max_factors: int = 8,
    copy_prob: float = 0.35,
    copy_noise: float = 0.0,
) -> FactorGraph:
    """Small binary-RV model; some factors are (noisy) arg-permuted copies.

    copy_noise = 0 duplicates tables bit-exactly, which exercises the
    exact-equality grouping paths; a positive value rescales the copy
    entrywise by U[1-copy_noise, 1+copy_noise].
    """
    n_rvs = int(rng.integers(2, max_rvs + 1))
    names = [f"V{i}" for i in range(n_rvs)]
    rvs = tuple(RandomVariable(n, ("t", "f")) for n in names)
    n_factors = int(rng.integers(1, max_factors + 1))
    factors: list[Factor] = []
    for i in range(n_factors):
        if factors and rng.random() < copy_prob:
            src = factors[int(rng.integers(len(factors)))]
            arity = len(src.args)
            args = tuple(
                names[j] for j in rng.choice(n_rvs, size=arity, replace=False)
            )
            table = src.table
            if copy_noise > 0.0:
                table = table * rng.uniform(
                    1.0 - copy_noise, 1.0 + copy_noise, size=table.shape
                )
            perm = rng.permutation(arity)
            table = np.transpose(table, tuple(int(p) for p in perm))
            factors.append(Factor(f"f{i}", args, table))
        else:
            arity = int(rng.integers(1, min(3, n_rvs) + 1))
            args = tuple(
                names[j] for j in rng.choice(n_rvs, size=arity, replace=False)
            )
            table = rng.uniform(0.1, 1.0, size=(2,) * arity)
            factors.append(Factor(f"f{i}", args, table))
    used = {a for f in factors for a in f.args}
    rvs = tuple(rv for rv in rvs if rv.name in used)
    return FactorGraph(rvs, tuple(factors))


def star_model(k: int, depth: int, seed: int = 0) -> FactorGraph:
    """Hub with k identical chains of the given depth; tables shared."""
    rng = np.random.default_rng(seed)
    base = [rng.uniform(0.1, 1.0, size=(2, 2)) for _ in range(depth)]
    rvs = [RandomVariable("Hub", ("t", "f"))]
    factors = []
    for i in range(1, k + 1):
        chain = [f"B{i}_{j}" for j in range(1, depth + 1)]
        rvs.extend(RandomVariable(n, ("t", "f")) for n in chain)
        factors.append(Factor(f"att{i}", ("Hub", chain[0]), base[0]))
        for j in range(depth - 1):
            factors.append(Factor(f"ch{i}_{j+1}", (chain[j], chain[j + 1]), base[j + 1]))
    return FactorGraph(tuple(rvs), tuple(factors))


@pytest.fixture
def sales():
    return sales_model()


@pytest.fixture
def sales_three():
    return sales_model_three()


@pytest.fixture
def counting():
    return counting_model()
