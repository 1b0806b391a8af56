"""Independent reference computations used only by the tests.

Nothing here calls the code under test except for reading plain problem data
(positions, arcs, weights, demands).
"""

import math
from collections import deque

import numpy as np

BOLTZMANN = 1.380649e-23
LIGHT = 299_792_458.0


def hand_path_loss(d, freq=1e9, bw=5e6, temp=290.0):
    lam = LIGHT / freq
    return 1.0 / (BOLTZMANN * temp * bw * (4 * math.pi / lam) ** 2 * d ** 2)


def bfs_two_hop(adj, i):
    """Nodes at hop distance 1 or 2 from ``i`` in an undirected adjacency dict."""
    dist = {i: 0}
    q = deque([i])
    while q:
        u = q.popleft()
        if dist[u] == 2:
            continue
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    return {v for v, d in dist.items() if 1 <= d <= 2}


def naive_objective(weights, arcs, x):
    total = 0.0
    for e in range(len(arcs)):
        s = 0.0
        for m in range(x.shape[1]):
            s += x[e, m]
        total += weights[e] * 2.0 ** s
    return total


def naive_violation(n_nodes, tails, heads, demands, x):
    total = 0.0
    for m in range(x.shape[1]):
        for i in range(n_nodes):
            inflow = sum(x[e, m] for e in range(len(tails)) if heads[e] == i)
            outflow = sum(x[e, m] for e in range(len(tails)) if tails[e] == i)
            total += abs(inflow - outflow + demands[i, m])
    return total


class DenseAL:
    """The local augmented Lagrangian built from explicit N x N C matrices.

    Node ``i``'s variable is the full vector ``x_i in R^{N M}`` (commodity-major,
    zeros outside i's out-neighbours), exactly as in the matrix formulation.
    """

    def __init__(self, problem, x_global, lam, rho):
        self.N = problem.n_nodes
        self.M = problem.n_commodities
        self.rho = rho
        self.lam = np.asarray(lam, dtype=float)
        self.d = problem.demands
        self.W = np.zeros((self.N, self.N))
        self.out = [[] for _ in range(self.N)]
        self.xs = np.zeros((self.N, self.M, self.N))
        for e, (t, h) in enumerate(zip(problem.tails, problem.heads)):
            self.W[t, h] = problem.weights[e]
            self.out[t].append(h)
            self.xs[t, :, h] = x_global[e]
        self.C = []
        for i in range(self.N):
            c = np.zeros((self.N, self.N))
            for k in self.out[i]:
                c[i, k] += 1.0
                c[k, k] -= 1.0
            self.C.append(c)

    def z(self, i):
        z = np.zeros((self.M, self.N))
        for m in range(self.M):
            acc = -self.d[:, m].copy()
            for j in range(self.N):
                if j != i:
                    acc += self.C[j] @ self.xs[j, m]
            z[m] = acc
        return z

    def embed(self, i, xi_local):
        """(out_degree, M) local block -> (M, N) dense block."""
        full = np.zeros((self.M, self.N))
        for r, k in enumerate(sorted(self.out[i])):
            full[:, k] = xi_local[r]
        return full

    def extract(self, i, dense):
        return np.array([dense[:, k] for k in sorted(self.out[i])]).reshape(-1, self.M)

    def value(self, i, xi_local):
        x = self.embed(i, xi_local)
        z = self.z(i)
        val = sum(self.W[i, k] * 2.0 ** x[:, k].sum() for k in self.out[i])
        for m in range(self.M):
            cx = self.C[i] @ x[m]
            val += self.lam[:, m] @ cx
            val += 0.5 * self.rho * np.sum((cx + z[m]) ** 2)
        return val

    def outside_constant(self, i):
        """Penalty mass on rows that node i's flows cannot touch."""
        rows = [r for r in range(self.N) if r != i and r not in self.out[i]]
        z = self.z(i)
        return 0.5 * self.rho * float(sum(np.sum(z[m, rows] ** 2) for m in range(self.M)))

    def gradient(self, i, xi_local):
        x = self.embed(i, xi_local)
        z = self.z(i)
        g = np.zeros((self.M, self.N))
        for m in range(self.M):
            for k in self.out[i]:
                g[m, k] += math.log(2) * self.W[i, k] * 2.0 ** x[:, k].sum()
            g[m] += self.C[i].T @ (self.lam[:, m] + self.rho * z[m])
            g[m] += self.rho * self.C[i].T @ self.C[i] @ x[m]
        return self.extract(i, g), g

    def hessian(self, i, xi_local):
        """Full (N M) x (N M) Hessian, commodity-major blocks."""
        x = self.embed(i, xi_local)
        NM = self.N * self.M
        h = np.zeros((NM, NM))
        ctc = self.C[i].T @ self.C[i]
        for m in range(self.M):
            for mp in range(self.M):
                blk = np.zeros((self.N, self.N))
                for k in self.out[i]:
                    blk[k, k] += math.log(2) ** 2 * self.W[i, k] * 2.0 ** x[:, k].sum()
                if m == mp:
                    blk += self.rho * ctc
                h[m * self.N:(m + 1) * self.N, mp * self.N:(mp + 1) * self.N] = blk
        return h

    def support(self, i):
        return [m * self.N + k for m in range(self.M) for k in sorted(self.out[i])]


def central_difference(f, x, h_scale=1e-6):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        h = h_scale * (1.0 + abs(x[idx]))
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2 * h)
    return g


def bisect_root(fn, lo, hi, tol=1e-13):
    flo = fn(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def all_simple_path_lengths(nodes, arcs, length, s, t):
    """Exhaustive DFS over simple paths; returns (best_length, all paths)."""
    adj = {n: [] for n in nodes}
    for a, b in arcs:
        adj[a].append(b)
    best, found = math.inf, []

    def dfs(u, path, dist):
        nonlocal best
        if u == t:
            found.append((dist, tuple(path)))
            best = min(best, dist)
            return
        for v in adj[u]:
            if v not in path:
                path.append(v)
                dfs(v, path, dist + length(u, v))
                path.pop()

    dfs(s, [s], 0.0)
    return best, found


def grid_search_two_path_split(w_a, w_b, rate, steps=200_001):
    """min over t in [0, R] of sum(w_a) 2^t + sum(w_b) 2^(R - t) on a fine grid."""
    t = np.linspace(0.0, rate, steps)
    vals = sum(w_a) * np.exp2(t) + sum(w_b) * np.exp2(rate - t)
    k = int(np.argmin(vals))
    return t[k], vals[k]
