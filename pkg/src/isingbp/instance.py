"""Problem instances: spin systems with pair couplings and transverse fields.

An instance is a graph of Ising couplings J_ij together with a per-spin
transverse field h_i >= 0.  Negative input fields carry no physics here:
a field sign flips into a phase of the trial amplitudes, so loaders
normalize h_i -> |h_i| and record which sites were flipped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class InstanceError(ValueError):
    """Invalid instance data (bad sizes, edges, or fields)."""


class GenerationError(RuntimeError):
    """A random generator could not produce a valid instance."""


@dataclass(eq=False)
class QuantumInstance:
    """Spin system: n spins, coupling edges (i, j, J), transverse fields h.

    edge_index is an (m, 2) int array with i < j per row and no duplicate
    rows; couplings is (m,) and fields is (n,) with every entry >= 0.
    flipped_sites records sites whose input field was negative and was
    normalized away by the loader.
    """

    n: int
    edge_index: np.ndarray
    couplings: np.ndarray
    fields: np.ndarray
    seed: int = 0
    flipped_sites: tuple = field(default=())

    def __post_init__(self):
        self.edge_index = np.asarray(self.edge_index, dtype=np.int64).reshape(-1, 2)
        self.couplings = np.asarray(self.couplings, dtype=np.float64).reshape(-1)
        self.fields = np.asarray(self.fields, dtype=np.float64).reshape(-1)
        if self.n < 1:
            raise InstanceError(f"need at least one spin, got n={self.n}")
        if self.fields.shape != (self.n,):
            raise InstanceError("fields must have one entry per spin")
        if np.any(self.fields < 0):
            raise InstanceError("transverse fields must be >= 0 after normalization")
        if not np.all(np.isfinite(self.fields)) or not np.all(np.isfinite(self.couplings)):
            raise InstanceError("fields and couplings must be finite")
        m = self.edge_index.shape[0]
        if self.couplings.shape != (m,):
            raise InstanceError("one coupling per edge required")
        if m:
            i, j = self.edge_index[:, 0], self.edge_index[:, 1]
            if np.any(i == j):
                raise InstanceError("self-loops are not allowed")
            if i.min(initial=0) < 0 or self.edge_index.max(initial=0) >= self.n:
                raise InstanceError("edge endpoint out of range")
            if np.any(i > j):
                raise InstanceError("edges must be stored with i < j")
            keys = i * self.n + j
            if np.unique(keys).size != m:
                raise InstanceError("duplicate edges are not allowed")

    @property
    def m(self) -> int:
        return self.edge_index.shape[0]

    def edge_list(self) -> list:
        return [
            (int(i), int(j), float(c))
            for (i, j), c in zip(self.edge_index, self.couplings)
        ]

    def with_uniform_field(self, h: float) -> "QuantumInstance":
        if h < 0:
            raise InstanceError("uniform field must be >= 0")
        return QuantumInstance(
            n=self.n,
            edge_index=self.edge_index.copy(),
            couplings=self.couplings.copy(),
            fields=np.full(self.n, float(h)),
            seed=self.seed,
        )

    def __eq__(self, other):
        if not isinstance(other, QuantumInstance):
            return NotImplemented
        return (
            self.n == other.n
            and self.seed == other.seed
            and np.array_equal(self.edge_index, other.edge_index)
            and np.array_equal(self.couplings, other.couplings)
            and np.array_equal(self.fields, other.fields)
        )


def _canonical_edges(pairs, couplings):
    """Sort endpoints within edges and edges lexicographically."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    couplings = np.asarray(couplings, dtype=np.float64).reshape(-1)
    lo = pairs.min(axis=1)
    hi = pairs.max(axis=1)
    order = np.lexsort((hi, lo))
    return np.column_stack([lo, hi])[order], couplings[order]


class ClassicalGraph:
    """Interaction graph the trial-measure couplings live on.

    By default this is the coupling graph of the instance itself; the
    directed-edge bookkeeping here backs every message-passing routine.
    Directed edge 2*e runs lo -> hi along edge e, 2*e + 1 runs hi -> lo.
    """

    def __init__(self, n: int, edge_index):
        edge_index = np.asarray(edge_index, dtype=np.int64).reshape(-1, 2)
        if edge_index.size:
            lo = edge_index.min(axis=1)
            hi = edge_index.max(axis=1)
            order = np.lexsort((hi, lo))
            edge_index = np.column_stack([lo, hi])[order]
            if lo.min(initial=0) < 0 or hi.max(initial=0) >= n:
                raise InstanceError("edge endpoint out of range")
            if np.any(lo == hi):
                raise InstanceError("self-loops are not allowed")
            keys = edge_index[:, 0] * n + edge_index[:, 1]
            if np.unique(keys).size != edge_index.shape[0]:
                raise InstanceError("duplicate edges are not allowed")
        self.n = int(n)
        self.edge_index = edge_index
        self.m = edge_index.shape[0]
        # directed arrays: src[2e] = lo, src[2e+1] = hi
        self.src = np.empty(2 * self.m, dtype=np.int64)
        self.dst = np.empty(2 * self.m, dtype=np.int64)
        self.src[0::2] = edge_index[:, 0]
        self.src[1::2] = edge_index[:, 1]
        self.dst[0::2] = edge_index[:, 1]
        self.dst[1::2] = edge_index[:, 0]
        self.edge_of_dir = np.repeat(np.arange(self.m, dtype=np.int64), 2)
        self.out_dirs = [
            np.flatnonzero(self.src == s) for s in range(self.n)
        ]
        self.degrees = np.array([len(d) for d in self.out_dirs])
        self.is_forest = self._forest_check()

    @classmethod
    def from_instance(cls, inst: QuantumInstance) -> "ClassicalGraph":
        return cls(inst.n, inst.edge_index)

    def _forest_check(self) -> bool:
        parent = list(range(self.n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for i, j in self.edge_index:
            ri, rj = find(int(i)), find(int(j))
            if ri == rj:
                return False
            parent[ri] = rj
        return True

    def reverse(self, d):
        return d ^ 1

    def bfs_order(self, root: int = 0) -> np.ndarray:
        """Sites in BFS order from root, unseen components appended in index order."""
        seen = np.zeros(self.n, dtype=bool)
        order = []
        for start in [root] + [s for s in range(self.n) if s != root]:
            if seen[start]:
                continue
            queue = [start]
            seen[start] = True
            while queue:
                s = queue.pop(0)
                order.append(s)
                for d in self.out_dirs[s]:
                    t = int(self.dst[d])
                    if not seen[t]:
                        seen[t] = True
                        queue.append(t)
        return np.array(order, dtype=np.int64)


def _draw_couplings(rng: np.random.Generator, m: int, law: str) -> np.ndarray:
    if law == "ferro":
        return np.ones(m)
    if law == "pm_one":
        return rng.choice(np.array([-1.0, 1.0]), size=m)
    if law == "gaussian":
        return rng.standard_normal(m)
    raise InstanceError(f"unknown coupling law {law!r}")


def generate_chain(n: int, law: str, h: float, seed: int) -> QuantumInstance:
    """Open chain of n spins with couplings on consecutive pairs."""
    if n < 2:
        raise InstanceError("a chain needs at least 2 spins")
    if h < 0:
        raise InstanceError("uniform field must be >= 0")
    rng = np.random.default_rng(seed)
    edges = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    couplings = _draw_couplings(rng, n - 1, law)
    return QuantumInstance(
        n=n,
        edge_index=edges,
        couplings=couplings,
        fields=np.full(n, float(h)),
        seed=seed,
    )


def generate_rrg(n: int, d: int, law: str, h: float, seed: int,
                 max_restarts: int = 1000) -> QuantumInstance:
    """Random regular graph via the configuration model.

    Pairs stubs uniformly at random and restarts from scratch whenever the
    pairing produces a self-loop or a multi-edge.
    """
    if d < 1 or d >= n:
        raise InstanceError(f"degree must satisfy 1 <= d < n, got d={d}, n={n}")
    if (n * d) % 2 != 0:
        raise InstanceError("n * d must be even")
    if h < 0:
        raise InstanceError("uniform field must be >= 0")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), d)
    for _ in range(max_restarts):
        perm = rng.permutation(stubs)
        a, b = perm[0::2], perm[1::2]
        if np.any(a == b):
            continue
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        keys = lo * n + hi
        if np.unique(keys).size != keys.size:
            continue
        pairs, _ = _canonical_edges(np.column_stack([lo, hi]), np.zeros(len(lo)))
        couplings = _draw_couplings(rng, n * d // 2, law)
        return QuantumInstance(
            n=n,
            edge_index=pairs,
            couplings=couplings,
            fields=np.full(n, float(h)),
            seed=seed,
        )
    raise GenerationError(
        f"no simple {d}-regular pairing found in {max_restarts} restarts"
    )


def save_instance(inst: QuantumInstance) -> str:
    """Serialize to a flat JSON document with keys n, edges, h, seed."""
    doc = {
        "n": inst.n,
        "edges": inst.edge_list(),
        "h": [float(x) for x in inst.fields],
        "seed": int(inst.seed),
    }
    return json.dumps(doc, indent=1)


def load_instance(text: str) -> QuantumInstance:
    """Parse an instance document, normalizing negative fields to |h|.

    Sites whose field sign was flipped are recorded in flipped_sites.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"instance document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InstanceError("instance document must be a JSON object")
    missing = {"n", "edges", "h"} - set(doc)
    if missing:
        raise InstanceError(f"instance document missing keys {sorted(missing)}")
    n = doc["n"]
    if not isinstance(n, int):
        raise InstanceError("n must be an integer")
    edges = doc["edges"]
    if not all(isinstance(e, (list, tuple)) and len(e) == 3 for e in edges):
        raise InstanceError("each edge must be a triple [i, j, J]")
    pairs = [(e[0], e[1]) for e in edges]
    couplings = [e[2] for e in edges]
    h = np.asarray(doc["h"], dtype=np.float64)
    flipped = tuple(int(i) for i in np.flatnonzero(h < 0))
    if pairs:
        edge_index, couplings = _canonical_edges(pairs, couplings)
    else:
        edge_index = np.zeros((0, 2), dtype=np.int64)
        couplings = np.zeros(0)
    return QuantumInstance(
        n=n,
        edge_index=edge_index,
        couplings=couplings,
        fields=np.abs(h),
        seed=int(doc.get("seed", 0)),
        flipped_sites=flipped,
    )
