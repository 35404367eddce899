"""Brute-force references over all 2^n spin configurations.

Used as oracles for belief propagation and the variational energy: every
quantity here is an explicit sum over the full configuration space, so it
is exact (and exponentially slow).  Spin i of basis state `s` is +1 when
bit i of s is set.
"""

from __future__ import annotations

import numpy as np

from .classical_bp import ParameterSet
from .instance import ClassicalGraph, QuantumInstance

ENUM_LIMIT = 20


def spin_table(n: int) -> np.ndarray:
    """(2^n, n) array of spins, sigma_i = +-1 from bit i of the row index."""
    if n > ENUM_LIMIT:
        raise ValueError(f"enumeration limited to n <= {ENUM_LIMIT}")
    idx = np.arange(1 << n, dtype=np.int64)
    return np.where((idx[:, None] >> np.arange(n)) & 1 == 1, 1.0, -1.0)


def gibbs_measure(graph: ClassicalGraph, params: ParameterSet) -> np.ndarray:
    """Normalized weights of the squared trial amplitudes over all states."""
    spins = spin_table(graph.n)
    log_w = 2.0 * spins @ params.b
    if graph.m:
        pair = spins[:, graph.edge_index[:, 0]] * spins[:, graph.edge_index[:, 1]]
        log_w = log_w + 2.0 * pair @ params.k
    log_w -= log_w.max()
    w = np.exp(log_w)
    return w / w.sum()


def cavity_field(graph: ClassicalGraph, params: ParameterSet, edge: int,
                 toward_hi: bool) -> float:
    """Exact cavity field nu_{i->j}: marginal of spin i with edge (i,j) removed.

    toward_hi selects the direction lo -> hi of the stored edge.
    """
    keep = np.ones(graph.m, dtype=bool)
    keep[edge] = False
    sub = ClassicalGraph(graph.n, graph.edge_index[keep])
    sub_params = ParameterSet(params.b, params.k[keep])
    mu = gibbs_measure(sub, sub_params)
    spins = spin_table(graph.n)
    lo, hi = graph.edge_index[edge]
    site = int(lo) if toward_hi else int(hi)
    up = mu[spins[:, site] > 0].sum()
    return 0.5 * float(np.log(up) - np.log(1.0 - up))


def classical_expectations(inst: QuantumInstance, graph: ClassicalGraph,
                           params: ParameterSet):
    """Exact Gibbs-measure energy pieces and magnetizations.

    Returns a dict with total energy, per-bond and per-site energies, and
    per-spin z and x expectations, all computed by full enumeration using
    the flipped-amplitude ratio for the transverse term.
    """
    mu = gibbs_measure(graph, params)
    spins = spin_table(inst.n)
    if inst.m:
        pair = spins[:, inst.edge_index[:, 0]] * spins[:, inst.edge_index[:, 1]]
        bond = -inst.couplings * (mu @ pair)
    else:
        bond = np.zeros(0)
    # amplitude ratio a(s with spin i flipped) / a(s)
    coupling_field = np.zeros((spins.shape[0], inst.n))
    for (i, j), k in zip(graph.edge_index, params.k):
        coupling_field[:, i] += 2.0 * k * spins[:, i] * spins[:, j]
        coupling_field[:, j] += 2.0 * k * spins[:, i] * spins[:, j]
    ratio = np.exp(-2.0 * params.b * spins - coupling_field)
    sigma_x = mu @ ratio
    site = -inst.fields * sigma_x
    sigma_z = mu @ spins
    return {
        "energy": float(bond.sum() + site.sum()),
        "bond_energies": bond,
        "site_energies": site,
        "sigma_z": sigma_z,
        "sigma_x": sigma_x,
    }


def trial_vector(graph: ClassicalGraph, params: ParameterSet) -> np.ndarray:
    """Normalized trial wave function as a 2^n state vector."""
    return np.sqrt(gibbs_measure(graph, params))


def quantum_expectation(inst: QuantumInstance, graph: ClassicalGraph,
                        params: ParameterSet) -> float:
    """<psi|H|psi> from the explicit trial vector (independent route)."""
    from .exact import apply_h

    psi = trial_vector(graph, params)
    return float(psi @ apply_h(inst, psi))
