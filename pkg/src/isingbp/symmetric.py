"""Zero-field trial states: couplings only, optimized by MaxSum.

With all per-spin fields at zero the cavity fields vanish identically and
the variational energy depends on the trial couplings alone,

    E(K) = -sum_(ij) J_ij tanh(2 K_ij) - sum_i h_i / prod_(j in di) cosh(2 K_ij).

Every spin expectation <s_i^z> is exactly zero in this family, so it
describes symmetric (paramagnetic-looking) states.  On loopy graphs the
Bethe energy of such a state is an estimate, not a bound, and can drop
below the true ground energy.

MaxSum messages live on a coupling grid.  The joint inner maximization
over the couplings around a site never gets enumerated per target value:
for a target coupling K_ij it is max over combos of
[c * prod_k sech(2 K_ik) + sum_k M_k] with c = h_i sech(2 K_ij) >= 0, a
maximum of lines in c, so pruning each neighbor table to its upper
envelope and composing the envelopes gives the exhaustive answer exactly
at a fraction of the cost, at any degree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import Grid, argmax_tiebreak
from .instance import ClassicalGraph, QuantumInstance

DEFAULT_COUPLING_GRID = Grid(step=0.01, half_count=200)

_DENSE_FRONT_LIMIT = 4096


def ss_energy(inst: QuantumInstance, k) -> float:
    """Bethe energy of the zero-field state with trial couplings k."""
    k = np.asarray(k, dtype=np.float64).reshape(-1)
    if k.shape != (inst.m,):
        raise ValueError("need one trial coupling per edge")
    bond = -np.sum(inst.couplings * np.tanh(2.0 * k))
    log_sech = -np.log(np.cosh(2.0 * k))
    site_logs = np.zeros(inst.n)
    np.add.at(site_logs, inst.edge_index[:, 0], log_sech)
    np.add.at(site_logs, inst.edge_index[:, 1], log_sech)
    site = -np.sum(inst.fields * np.exp(site_logs))
    return float(bond + site)


@dataclass
class SSSolution:
    k: np.ndarray
    energy: float
    converged: bool
    iterations: int
    residual: float


def _envelope(p: np.ndarray, q: np.ndarray):
    """Prune lines c -> p*c + q (c >= 0) to their upper envelope.

    Drops pointwise-dominated lines with a cumulative max, then runs a
    convex-hull scan; with slopes ascending and intercepts descending the
    survivors are exactly the lines that win somewhere on c >= 0.
    """
    order = np.lexsort((-q, p))
    p, q = p[order], q[order]
    keep = np.ones(p.size, dtype=bool)
    keep[1:] = p[1:] > p[:-1]
    p, q = p[keep], q[keep]
    rev_max = np.maximum.accumulate(q[::-1])[::-1]
    keep = np.ones(p.size, dtype=bool)
    keep[:-1] = q[:-1] > rev_max[1:]
    p, q = p[keep], q[keep]
    if p.size > _DENSE_FRONT_LIMIT:
        return p, q
    hull_p, hull_q = [], []
    for x, y in zip(p, q):
        while len(hull_p) >= 2:
            x1, y1 = hull_p[-2], hull_q[-2]
            x2, y2 = hull_p[-1], hull_q[-1]
            if (y2 - y1) * (x - x1) <= (y - y1) * (x2 - x1):
                hull_p.pop()
                hull_q.pop()
            else:
                break
        hull_p.append(x)
        hull_q.append(y)
    return np.asarray(hull_p), np.asarray(hull_q)


def _compose(front_a, front_b):
    pa, qa = front_a
    pb, qb = front_b
    p = (pa[:, None] * pb[None, :]).ravel()
    q = (qa[:, None] + qb[None, :]).ravel()
    return _envelope(p, q)


def _eval_front(front, c: np.ndarray) -> np.ndarray:
    p, q = front
    out = np.full(c.shape, -np.inf)
    step = max(1, (1 << 22) // max(1, p.size))
    for start in range(0, c.size, step):
        block = c[start:start + step, None]
        out[start:start + step] = np.max(block * p[None, :] + q[None, :], axis=1)
    return out


def ss_maxsum_solve(inst: QuantumInstance, grid: Grid = DEFAULT_COUPLING_GRID,
                    max_iters: int = 1000, seed: int = 0,
                    eps: float = 1e-9) -> SSSolution:
    """MaxSum over the coupling grid; extraction is a per-edge arg-max of

        w_e(K) = -J_e tanh(2K) + M_fwd(K) + M_rev(K),

    ties to the smallest |K|, negative first.  Non-convergence (loopy
    graphs) falls back to the best message set seen.
    """
    graph = ClassicalGraph.from_instance(inst)
    vals = grid.values
    sech = 1.0 / np.cosh(2.0 * vals)
    bond_gain = inst.couplings[:, None] * np.tanh(2.0 * vals)[None, :]

    messages = np.zeros((2 * graph.m, vals.size))
    if not graph.is_forest:
        rng = np.random.default_rng(seed)
        messages += rng.uniform(-1e-8, 0.0, size=messages.shape)

    best = (np.inf, messages.copy())
    converged = False
    residual = np.inf
    iterations = 0
    for it in range(1, max_iters + 1):
        iterations = it
        fronts = [_envelope(sech.copy(), messages[d].copy())
                  for d in range(2 * graph.m)]
        new = np.empty_like(messages)
        for d in range(2 * graph.m):
            site = int(graph.src[d])
            front = (np.ones(1), np.zeros(1))
            for d_out in graph.out_dirs[site]:
                if int(d_out) == d:
                    continue
                front = _compose(front, fronts[int(d_out) ^ 1])
            c = inst.fields[site] * sech
            new[d] = bond_gain[graph.edge_of_dir[d]] + _eval_front(front, c)
        new -= new.max(axis=1, keepdims=True)
        residual = float(np.max(np.abs(new - messages))) if graph.m else 0.0
        messages = new
        if residual < best[0]:
            best = (residual, messages.copy())
        if residual <= eps:
            converged = True
            break

    if not converged:
        messages = best[1]
        residual = best[0]

    k_star = np.zeros(graph.m)
    for e in range(graph.m):
        weight = -bond_gain[e] + messages[2 * e] + messages[2 * e + 1]
        k_star[e] = vals[argmax_tiebreak(weight, vals)]
    return SSSolution(
        k=k_star,
        energy=ss_energy(inst, k_star),
        converged=converged,
        iterations=iterations,
        residual=residual,
    )
