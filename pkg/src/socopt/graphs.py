"""Communication graphs for the distributed equilibrium seeker.

Players exchange estimates over a strongly connected digraph whose
adjacency matrix is doubly stochastic with positive self-loops; the
second-largest singular value ``sigma_bar`` controls how fast consensus
errors decay.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["CommGraph", "complete_graph", "metropolis_graph"]

_STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True)
class CommGraph:
    adjacency: np.ndarray
    sigma_bar: float

    @property
    def n_players(self) -> int:
        return self.adjacency.shape[0]

    @classmethod
    def from_adjacency(cls, adjacency) -> "CommGraph":
        """Validate a weight matrix and compute its ``sigma_bar``.

        Requirements: square, nonnegative, doubly stochastic to 1e-12,
        positive diagonal, strongly connected (certified through the
        reachability closure ``(I + A)^(N-1) > 0``), and second-largest
        singular value strictly below one.
        """
        A = np.array(adjacency, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("adjacency must be square")
        n = A.shape[0]
        if np.any(A < 0):
            raise ValueError("adjacency must be nonnegative")
        ones = np.ones(n)
        if not (np.allclose(A @ ones, ones, atol=_STOCHASTIC_TOL)
                and np.allclose(A.T @ ones, ones, atol=_STOCHASTIC_TOL)):
            raise ValueError("adjacency must be doubly stochastic")
        if np.any(np.diag(A) <= 0):
            raise ValueError("self-loop weights a_ii must be positive")
        reach = np.linalg.matrix_power(np.eye(n) + (A > 0), n - 1)
        if np.any(reach <= 0):
            raise ValueError("graph is not strongly connected")
        singular = np.linalg.svd(A, compute_uv=False)
        sigma_bar = float(singular[1]) if n > 1 else 0.0
        if sigma_bar >= 1.0 - 1e-12:
            raise ValueError(f"second-largest singular value {sigma_bar} not < 1")
        A.setflags(write=False)
        return cls(adjacency=A, sigma_bar=sigma_bar)


def complete_graph(n_players: int) -> CommGraph:
    """Metropolis weights on the complete graph: every entry ``1/N``."""
    if n_players < 1:
        raise ValueError("need at least one player")
    return CommGraph.from_adjacency(np.full((n_players, n_players), 1.0 / n_players))


def _connected(edges: np.ndarray) -> bool:
    n = edges.shape[0]
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        i = stack.pop()
        for j in np.nonzero(edges[i])[0]:
            if not seen[j]:
                seen[j] = True
                stack.append(int(j))
    return bool(seen.all())


def metropolis_graph(n_players: int, edge_probability: float, rng_seed: int,
                     max_retries: int = 1000) -> CommGraph:
    """Random undirected graph with Metropolis weights.

    Each unordered pair of distinct players is linked with probability
    ``edge_probability``; sampling repeats (advancing the stream) until
    the graph is connected.  Edge weights are
    ``a_ij = 1 / (1 + max(deg_i, deg_j))`` and the diagonal absorbs the
    remainder, which makes the matrix doubly stochastic by construction.
    """
    if not 0 < edge_probability <= 1:
        raise ValueError("edge_probability must lie in (0, 1]")
    if n_players < 2:
        raise ValueError("need at least two players")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(rng_seed)))
    for _ in range(max_retries):
        edges = np.zeros((n_players, n_players), dtype=bool)
        iu = np.triu_indices(n_players, k=1)
        mask = rng.random(iu[0].size) < edge_probability
        edges[iu[0][mask], iu[1][mask]] = True
        edges |= edges.T
        if not _connected(edges):
            continue
        deg = edges.sum(axis=1)
        A = np.zeros((n_players, n_players))
        for i in range(n_players):
            for j in np.nonzero(edges[i])[0]:
                A[i, j] = 1.0 / (1.0 + max(deg[i], deg[j]))
            A[i, i] = 1.0 - A[i].sum()
        return CommGraph.from_adjacency(A)
    raise RuntimeError(
        f"no connected graph after {max_retries} attempts "
        f"(n={n_players}, p={edge_probability})"
    )
