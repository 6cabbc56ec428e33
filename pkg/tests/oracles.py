"""Independent reference computations used by the tests.

Nothing here imports the package's numerical code: derivatives come from
plain central differences, graph facts from networkx, spectra from dense
eigensolves of matrices built entry by entry.
"""

import itertools

import networkx as nx
import numpy as np


def fd_gradient(f, x, h=1e-6):
    x = np.asarray(x, float)
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def fd_jacobian(grad, x, h=1e-5):
    x = np.asarray(x, float)
    n = len(x)
    out = np.zeros((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        out[:, i] = (grad(x + e) - grad(x - e)) / (2 * h)
    return 0.5 * (out + out.T)


def to_networkx(g):
    G = nx.Graph()
    G.add_nodes_from(g.vertices)
    G.add_edges_from(g.sorted_edges)
    return G


def nx_bipartite(g):
    return nx.is_bipartite(to_networkx(g)) and not g.loops


def nx_components(n, edges):
    G = nx.Graph()
    G.add_nodes_from(range(1, n + 1))
    G.add_edges_from(edges)
    return nx.number_connected_components(G)


def laplacian_by_entries(n, edges, weights=None):
    L = np.zeros((n, n))
    for k, (u, v) in enumerate(edges):
        w = 1.0 if weights is None else weights[k]
        L[u - 1, u - 1] += w
        L[v - 1, v - 1] += w
        L[u - 1, v - 1] -= w
        L[v - 1, u - 1] -= w
    return L


def edge_sum_function(edges, phi, self_terms=None):
    """f(x) = sum over edges of phi(x_u, x_v) plus optional per-vertex terms, as a plain loop."""

    def f(x):
        total = 0.0
        for u, v in edges:
            total += float(phi(x[u - 1], x[v - 1]))
        if self_terms:
            for v, a in self_terms.items():
                total += float(a(x[v - 1]))
        return total

    return f


def inertia_counts(eigs, tau):
    eigs = np.asarray(eigs)
    return int(np.sum(eigs < -tau)), int(np.sum(np.abs(eigs) <= tau)), int(np.sum(eigs > tau))


def ring_energy(theta, delta):
    n = len(theta)
    return sum(float(delta(theta[i] - theta[i - 1])) for i in range(n))


def brute_force_automorphisms(edges, n):
    es = {frozenset(e) for e in edges}
    out = []
    for perm in itertools.permutations(range(1, n + 1)):
        if all(frozenset((perm[u - 1], perm[v - 1])) in es for u, v in edges):
            out.append(perm)
    return out


def fd_gradient_batch(f, xs, h=1e-6):
    """Central differences for a batched scalar function, rows of ``xs`` as points."""
    xs = np.asarray(xs, float)
    b, n = xs.shape
    e = h * np.eye(n)
    plus = f((xs[:, None, :] + e).reshape(-1, n)).reshape(b, n)
    minus = f((xs[:, None, :] - e).reshape(-1, n)).reshape(b, n)
    return (plus - minus) / (2 * h)


def fd_jacobian_batch(grad, xs, h=1e-5):
    """Differenced batched gradient; entry [k, i, j] is d grad_i / d x_j at row k."""
    xs = np.asarray(xs, float)
    b, n = xs.shape
    e = h * np.eye(n)
    plus = grad((xs[:, None, :] + e).reshape(-1, n)).reshape(b, n, n)
    minus = grad((xs[:, None, :] - e).reshape(-1, n)).reshape(b, n, n)
    return np.swapaxes((plus - minus) / (2 * h), 1, 2)
