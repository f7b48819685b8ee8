"""Random finite chains, regions and formulae for property tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .formula import And, Atom, BoundedUntil, Next, Not, Prob, Until, Always
from .kernel import MatrixKernel
from .space import Region, StateSpace


def random_chain(rng: np.random.Generator, n: int, max_support: int = 5, absorbing_rate: float = 0.1) -> MatrixKernel:
    """Sparse random stochastic matrix; a fraction of states are made absorbing."""
    P = np.zeros((n, n))
    for i in range(n):
        if rng.random() < absorbing_rate:
            P[i, i] = 1.0
            continue
        k = int(rng.integers(1, min(n, max_support) + 1))
        cols = rng.choice(n, size=k, replace=False)
        P[i, cols] = rng.dirichlet(np.ones(k))
    return MatrixKernel(P)


def random_disjoint_regions(rng: np.random.Generator, space: StateSpace, p_a: float = 0.6, p_b: float = 0.2):
    """Disjoint (A, B) with each state in B w.p. p_b, else in A w.p. p_a."""
    u = rng.random(space.size)
    B = u < p_b
    A = (u >= p_b) & (rng.random(space.size) < p_a)
    return Region(space, A), Region(space, B)


def leaky_chain(rng: np.random.Generator, n: int, A_size: int, levels: int = 4, min_edge: float = 0.1) -> tuple:
    """Chain in which A = {0, ..., A_size - 1} is simple by construction.

    States of A get levels 1..levels; a level-1 state moves outside A with
    probability >= min_edge and a level-k state moves to some level-(k-1)
    state with probability >= min_edge, so every state of A has an exit
    path of length <= levels.
    """
    if not 0 < A_size < n:
        raise ValueError("need 0 < |A| < n")
    P = np.zeros((n, n))
    level = np.sort(rng.integers(1, levels + 1, size=A_size))
    level[0] = 1
    outside = np.arange(A_size, n)
    for i in range(n):
        k = int(rng.integers(1, min(n, 5) + 1))
        cols = rng.choice(n, size=k, replace=False)
        P[i, cols] = rng.dirichlet(np.ones(k)) * (1 - min_edge)
        if i < A_size:
            lower = outside if level[i] == 1 else np.flatnonzero(level[:A_size] == level[i] - 1)
            if lower.size == 0:
                lower = outside
            P[i, rng.choice(lower)] += min_edge
        else:
            P[i, rng.choice(n)] += min_edge
    space = StateSpace.finite(n)
    return MatrixKernel(P, space), Region.from_states(space, np.arange(A_size))


def trapped_chain(rng: np.random.Generator, n: int, A_size: int) -> tuple:
    """Chain in which A = {0, ..., A_size - 1} contains a closed class, hence is non-simple."""
    if not 0 < A_size <= n:
        raise ValueError("need 0 < |A| <= n")
    kernel = random_chain(rng, n, absorbing_rate=0.0)
    P = kernel.dense().copy()
    size = int(rng.integers(1, A_size + 1))
    trap = rng.choice(A_size, size=size, replace=False)
    for i in trap:
        P[i] = 0.0
        k = int(rng.integers(1, size + 1))
        cols = rng.choice(trap, size=k, replace=False)
        P[i, cols] = rng.dirichlet(np.ones(k))
    space = StateSpace.finite(n)
    return MatrixKernel(P, space), Region.from_states(space, np.arange(A_size))


def random_formula(rng: np.random.Generator, depth: int, names=("a", "b", "c"), max_steps: int = 6):
    """Random state formula of nesting depth at most ``depth``."""
    if depth <= 0 or rng.random() < 0.2:
        return Atom(str(rng.choice(list(names))))
    kind = rng.choice(["not", "and", "prob", "prob", "prob"])
    if kind == "not":
        return Not(random_formula(rng, depth - 1, names, max_steps))
    if kind == "and":
        return And(random_formula(rng, depth - 1, names, max_steps), random_formula(rng, depth - 1, names, max_steps))
    cmp = str(rng.choice(["<", "<=", ">", ">="]))
    p = float(np.round(rng.random(), 2))
    sub = lambda: random_formula(rng, depth - 1, names, max_steps)  # noqa: E731
    path_kind = rng.choice(["next", "bounded", "until", "always", "always_bounded"])
    if path_kind == "next":
        path = Next(sub())
    elif path_kind == "bounded":
        path = BoundedUntil(sub(), sub(), int(rng.integers(0, max_steps + 1)))
    elif path_kind == "until":
        path = Until(sub(), sub())
    elif path_kind == "always":
        path = Always(sub())
    else:
        path = Always(sub(), int(rng.integers(0, max_steps + 1)))
    return Prob(cmp, p, path)
