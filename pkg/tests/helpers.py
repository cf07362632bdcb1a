"""Shared generators and independent oracles for the test suite."""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg
from scipy.integrate import quad

from gapforge.bands import PeriodCellGraph
from gapforge.intervals import GapSpec, IntervalSet, validate_gap_spec


def random_gap_spec(rng: np.random.Generator, m: int, n: int, lo: float = 0.0, hi: float = 100.0,
                    min_sep: float = 0.05) -> GapSpec:
    """Random strict chain of 2m endpoints in (lo, hi) with a minimum
    separation to keep the design formulas well away from degeneracy."""
    while True:
        pts = np.sort(rng.uniform(lo + min_sep, hi, size=2 * m))
        if np.all(np.diff(pts) > min_sep):
            break
    pairs = [(float(pts[2 * j]), float(pts[2 * j + 1])) for j in range(m)]
    return validate_gap_spec(pairs, n)


def sphere_measure_oracle(k: int) -> float:
    """omega_k by the recursion omega_j = omega_{j-1} * int_0^pi sin^{j-1},
    seeded at omega_0 = 2 (two points); quadrature only, no Gamma."""
    om = 2.0
    for j in range(1, k + 1):
        val, _ = quad(lambda t, p=j - 1: math.sin(t) ** p, 0.0, math.pi, epsabs=1e-13, epsrel=1e-12)
        om *= val
    return om


def hausdorff_grid_oracle(a: IntervalSet, b: IntervalSet, window: tuple[float, float],
                          step: float = 1e-4) -> float:
    """Brute-force Hausdorff distance: sample each closed set on a dense
    grid and take the worst pointwise distance to the other set."""
    lo, hi = window

    def points(s: IntervalSet) -> np.ndarray:
        chunks = []
        for p, q in s.clipped(lo, hi):
            count = max(2, int(round((q - p) / step)) + 1)
            chunks.append(np.linspace(p, q, count))
        return np.concatenate(chunks)

    def dist_to(xs: np.ndarray, s: IntervalSet) -> np.ndarray:
        best = np.full(len(xs), np.inf)
        for p, q in s.clipped(lo, hi):
            d = np.where(xs < p, p - xs, np.where(xs > q, xs - q, 0.0))
            best = np.minimum(best, d)
        return best

    d_ab = dist_to(points(a), b).max()
    d_ba = dist_to(points(b), a).max()
    return float(max(d_ab, d_ba))


def small_torus_graph(rng, n=3):
    """n x n grid with random positive masses/weights and both directions
    paired; n=3 gives 9 vertices, small enough for the dense oracle."""
    idx = lambda i, j: i * n + j
    edges, weights = [], []
    for i in range(n):
        for j in range(n):
            if i + 1 < n:
                edges.append([idx(i, j), idx(i + 1, j)])
                weights.append(float(rng.uniform(0.2, 2.0)))
            if j + 1 < n:
                edges.append([idx(i, j), idx(i, j + 1)])
                weights.append(float(rng.uniform(0.2, 2.0)))
    pairs = tuple((idx(0, j), idx(n - 1, j), 1) for j in range(n)) + tuple(
        (idx(i, 0), idx(i, n - 1), 2) for i in range(n)
    )
    return PeriodCellGraph(
        masses=rng.uniform(0.3, 2.0, size=n * n),
        edges=np.asarray(edges),
        weights=np.asarray(weights),
        boundary_pairs=pairs,
        ndim=2,
    )


def dense_folded_oracle(graph, theta, k):
    """Independent fold: resolve phases by fixpoint iteration over the
    boundary pairs, project the dense unfolded pencil with S, and solve
    the generalized eigenproblem directly."""
    nv = graph.nv
    phase = [None] * nv
    col = [None] * nv
    is_b = {b for _, b, _ in graph.boundary_pairs}
    reps = [v for v in range(nv) if v not in is_b]
    for c, v in enumerate(reps):
        phase[v] = 1.0 + 0.0j
        col[v] = c
    changed = True
    while changed:
        changed = False
        for a, b, d in graph.boundary_pairs:
            if phase[a] is not None and phase[b] is None:
                phase[b] = phase[a] * np.conj(theta[d - 1])
                col[b] = col[a]
                changed = True
    assert all(p is not None for p in phase)
    S = np.zeros((nv, len(reps)), dtype=complex)
    for v in range(nv):
        S[v, col[v]] = phase[v]
    K = np.zeros((nv, nv), dtype=complex)
    for (a, b), w in zip(graph.edges, graph.weights):
        K[a, a] += w
        K[b, b] += w
        K[a, b] -= w
        K[b, a] -= w
    Kf = S.conj().T @ K @ S
    Mf = S.conj().T @ np.diag(graph.masses) @ S
    vals = scipy.linalg.eigh(Kf, Mf, eigvals_only=True)
    return np.sort(vals.real)[:k]
