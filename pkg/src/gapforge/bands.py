"""Discrete Floquet band structure on a weighted-graph period cell.

The period cell is the square [0, s]^2 minus small disks, with a truncated
sphere ("bubble") glued along each hole boundary; lumped vertex masses are
local Riemannian areas and edge weights finite-volume conductances.  Bloch
conditions u(b) = conj(theta_dir) u(a) fold the paired faces into a
Hermitian pencil; Neumann (faces free) and Dirichlet (faces clamped)
spectra enclose every theta spectrum, which is checked, not assumed.

The builder is 2-D; the theta eigensolver works for any number of paired
directions.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._fmt import csv_lines
from .cell import EpsGeometry
from .errors import GapForgeError, GeometryError, ResolutionError
from .intervals import ENDPOINT_TOL, IntervalSet

DENSE_LIMIT = 4000
ENCLOSURE_SLACK = 1e-8
_EIGSH_SEED = 0x0BADC0DE


@dataclass(frozen=True)
class GridSpec:
    """Resolution knobs for the cell builder: square grid cells per side
    and (optionally) the number of polar rings per bubble (default: match
    the flat grid spacing on the sphere)."""

    base_resolution: int = 64
    polar_points: int | None = None


@dataclass
class PeriodCellGraph:
    """Weighted graph with positive lumped masses, positive edge weights
    and per-direction bijections between opposite-face vertices."""

    masses: np.ndarray
    edges: np.ndarray  # (ne, 2) vertex ids
    weights: np.ndarray
    boundary_pairs: tuple[tuple[int, int, int], ...]  # (a, b, direction 1..ndim)
    ndim: int
    meta: dict = field(default_factory=dict)
    _fold: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def nv(self) -> int:
        return len(self.masses)

    def validate(self) -> None:
        if np.any(self.masses <= 0):
            raise GeometryError("all vertex masses must be positive")
        if np.any(self.weights <= 0):
            raise GeometryError("all edge weights must be positive")
        for d in range(1, self.ndim + 1):
            pairs = [(a, b) for a, b, dd in self.boundary_pairs if dd == d]
            if len({a for a, _ in pairs}) != len(pairs) or len({b for _, b in pairs}) != len(pairs):
                raise GeometryError(f"boundary pairs in direction {d} are not a bijection")
        # connectivity over edges
        adj: list[list[int]] = [[] for _ in range(self.nv)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        seen = np.zeros(self.nv, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            v = stack.pop()
            for u in adj[v]:
                if not seen[u]:
                    seen[u] = True
                    stack.append(u)
        if not seen.all():
            raise GeometryError("period-cell graph is not connected")

    def fold_structure(self) -> tuple[np.ndarray, np.ndarray, int]:
        """(representative index, integer shift vectors, folded dimension):
        vertex p carries value phase(p) * x[rep(p)] with
        phase(p) = prod_d conj(theta_d)^shift[p, d]."""
        if self._fold is not None:
            return self._fold
        nv, nd = self.nv, self.ndim
        comp = -np.ones(nv, dtype=int)
        shift = np.zeros((nv, nd), dtype=int)
        rel: list[list[tuple[int, int]]] = [[] for _ in range(nv)]
        for a, b, d in self.boundary_pairs:
            rel[a].append((b, d))
            rel[b].append((a, -d))
        n_comp = 0
        for root in range(nv):
            if comp[root] >= 0:
                continue
            comp[root] = n_comp
            stack = [root]
            while stack:
                v = stack.pop()
                for u, d in rel[v]:
                    t = shift[v].copy()
                    t[abs(d) - 1] += 1 if d > 0 else -1
                    if comp[u] < 0:
                        comp[u] = n_comp
                        shift[u] = t
                        stack.append(u)
                    elif not np.array_equal(shift[u], t):
                        raise GeometryError("inconsistent boundary identifications")
            n_comp += 1
        # component ids are already 0..n_comp-1 in vertex order
        self._fold = (comp, shift, n_comp)
        return self._fold

    def to_json(self) -> dict:
        return {
            "vertices": [{"id": i, "mass": float(m)} for i, m in enumerate(self.masses)],
            "edges": [
                {"a": int(a), "b": int(b), "w": float(w)}
                for (a, b), w in zip(self.edges, self.weights)
            ],
            "boundary_pairs": [
                {"a": int(a), "b": int(b), "dir": int(d)} for a, b, d in self.boundary_pairs
            ],
        }


def build_cell_graph(
    geom: EpsGeometry | None = None,
    *,
    holes: Sequence[tuple[float, float, float, float]] | None = None,
    cell_size: float = 1.0,
    grid: GridSpec | None = None,
) -> PeriodCellGraph:
    """Finite-volume graph of the perforated square with glued bubbles.

    ``holes`` is a sequence of (cx, cy, hole_radius, bubble_radius) in
    model-geometry mode; alternatively an n = 2 ``EpsGeometry`` places its
    channels on the cell midline.  Every hole must span at least 6 grid
    cells and stay clear of the cell boundary and the other holes.
    """
    grid = grid or GridSpec()
    if geom is not None:
        if geom.n != 2:
            raise GeometryError("graph builder is 2-D only; use the radial module for n > 2")
        cell_size = geom.eps
        m = len(geom.channels)
        holes = tuple(
            ((j + 0.5) * cell_size / m, 0.5 * cell_size, ch.d_eps, ch.b_eps)
            for j, ch in enumerate(geom.channels)
        )
    if holes is None:
        holes = ()
    N = grid.base_resolution
    if N < 2:
        raise ResolutionError("base resolution must be at least 2")
    h = cell_size / N
    for i, (cx, cy, r, b) in enumerate(holes):
        if 2.0 * r / h < 6.0:
            raise ResolutionError(
                f"hole {i}: diameter {2 * r} spans {2 * r / h:.1f} < 6 grid cells"
            )
        if not (r < b):
            raise GeometryError(f"hole {i}: hole radius {r} must be smaller than bubble radius {b}")
        if min(cx, cy, cell_size - cx, cell_size - cy) <= r:
            raise GeometryError(f"hole {i} touches the cell boundary")
        for k2 in range(i):
            cx2, cy2, r2, _ = holes[k2]
            if math.hypot(cx - cx2, cy - cy2) <= r + r2:
                raise GeometryError(f"holes {k2} and {i} violate the separation condition")

    # square grid vertices, minus hole interiors
    idx = -np.ones((N + 1, N + 1), dtype=int)
    masses: list[float] = []
    coords: list[tuple[float, float]] = []
    for i in range(N + 1):
        for j in range(N + 1):
            x, y = i * h, j * h
            if any(math.hypot(x - cx, y - cy) < r for cx, cy, r, _ in holes):
                continue
            fx = 0.5 if i in (0, N) else 1.0
            fy = 0.5 if j in (0, N) else 1.0
            idx[i, j] = len(masses)
            masses.append(fx * fy * h * h)
            coords.append((x, y))

    edges: list[tuple[int, int]] = []
    weights: list[float] = []
    for i in range(N + 1):
        for j in range(N + 1):
            a = idx[i, j]
            if a < 0:
                continue
            if i < N and idx[i + 1, j] >= 0:  # x-edge; halved on y-faces
                edges.append((a, idx[i + 1, j]))
                weights.append(0.5 if j in (0, N) else 1.0)
            if j < N and idx[i, j + 1] >= 0:  # y-edge; halved on x-faces
                edges.append((a, idx[i, j + 1]))
                weights.append(0.5 if i in (0, N) else 1.0)

    for cx, cy, r, b in holes:
        _glue_bubble(masses, coords, edges, weights, idx, N, h, cx, cy, r, b, grid)

    pairs: list[tuple[int, int, int]] = []
    for j in range(N + 1):
        pairs.append((int(idx[0, j]), int(idx[N, j]), 1))
    for i in range(N + 1):
        pairs.append((int(idx[i, 0]), int(idx[i, N]), 2))

    graph = PeriodCellGraph(
        masses=np.asarray(masses),
        edges=np.asarray(edges, dtype=int),
        weights=np.asarray(weights),
        boundary_pairs=tuple(pairs),
        ndim=2,
        meta={
            "cell_size": cell_size,
            "base_resolution": N,
            "holes": [list(hole) for hole in holes],
        },
    )
    graph.validate()
    return graph


def _glue_bubble(masses, coords, edges, weights, idx, N, h, cx, cy, r, b, grid: GridSpec):
    """Latitude-longitude graph on the truncated sphere of radius b,
    identified ring-to-ring with the hole-boundary vertices of the square
    grid (angular matching); masses are exact cell areas on the sphere."""
    # hole-boundary ring: alive square vertices that lost a neighbour
    ring: list[int] = []
    for i in range(N + 1):
        for j in range(N + 1):
            a = idx[i, j]
            if a < 0:
                continue
            nb_removed = False
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ii, jj = i + di, j + dj
                if 0 <= ii <= N and 0 <= jj <= N and idx[ii, jj] < 0:
                    x, y = ii * h, jj * h
                    if math.hypot(x - cx, y - cy) < r:
                        nb_removed = True
            if nb_removed:
                ring.append(a)
    if len(ring) < 4:
        raise ResolutionError("hole boundary ring has fewer than 4 vertices")
    phis = np.array([math.atan2(coords[a][1] - cy, coords[a][0] - cx) for a in ring])
    order = np.argsort(phis)
    ring = [ring[k] for k in order]
    phis = phis[order]
    Q = len(ring)
    # azimuthal cell widths (non-uniform ring spacing on the square grid)
    dphi = np.empty(Q)
    for q in range(Q):
        left = phis[q] - phis[q - 1] if q > 0 else phis[0] - (phis[-1] - 2 * math.pi)
        right = phis[(q + 1) % Q] - phis[q] if q + 1 < Q else phis[0] + 2 * math.pi - phis[-1]
        dphi[q] = 0.5 * (left + right)
    gap = np.diff(np.concatenate([phis, [phis[0] + 2 * math.pi]]))

    theta0 = math.asin(r / b)
    P = grid.polar_points or max(8, round((math.pi - theta0) * b / h))
    dth = (math.pi - theta0) / P
    angles = [theta0 + p * dth for p in range(P + 1)]

    def area(th_lo, th_hi, dp):  # exact spherical cell area
        return b * b * dp * (math.cos(th_lo) - math.cos(th_hi))

    ring_ids = [[0] * Q for _ in range(P)]  # rings p=0..P-1; pole handled apart
    ring_ids[0] = ring
    for q in range(Q):
        masses[ring[q]] += area(theta0, theta0 + 0.5 * dth, dphi[q])
    for p in range(1, P):
        for q in range(Q):
            ring_ids[p][q] = len(masses)
            masses.append(area(angles[p] - 0.5 * dth, angles[p] + 0.5 * dth, dphi[q]))
            coords.append((cx, cy))
    pole = len(masses)
    masses.append(area(math.pi - 0.5 * dth, math.pi, 2 * math.pi))
    coords.append((cx, cy))

    for p in range(P):
        th_mid = angles[p] + 0.5 * dth
        for q in range(Q):
            c_bub = math.sin(th_mid) * dphi[q] / dth
            if p == 0:
                # seam: harmonic mean with the flat-grid conductance
                w = 2.0 * 1.0 * c_bub / (1.0 + c_bub)
            else:
                w = c_bub
            target = pole if p == P - 1 else ring_ids[p + 1][q]
            edges.append((ring_ids[p][q], target))
            weights.append(w)
    for p in range(1, P):
        s = math.sin(angles[p])
        for q in range(Q):
            edges.append((ring_ids[p][q], ring_ids[p][(q + 1) % Q]))
            weights.append(dth / (s * gap[q]))


# ---------------------------------------------------------------------------
# theta spectra


def _smallest_eigenvalues(K: sp.csr_matrix, M: np.ndarray, k: int) -> np.ndarray:
    """Ascending k smallest eigenvalues of the pencil (K, M) with diagonal
    mass; dense below DENSE_LIMIT unknowns, else shift-invert Lanczos with
    a deterministic start vector."""
    dim = K.shape[0]
    if k < 1 or k > dim:
        raise GapForgeError(f"k={k} eigenvalues requested from dimension {dim}")
    if dim <= DENSE_LIMIT:
        s = 1.0 / np.sqrt(M)
        A = K.toarray() * s[:, None] * s[None, :]
        vals = scipy.linalg.eigh(A, eigvals_only=True, subset_by_index=(0, k - 1))
        return np.asarray(vals, dtype=float)
    if k >= dim - 1:
        raise GapForgeError(f"sparse path needs k={k} < dim-1={dim - 1}")
    scale = float(K.diagonal().real.sum() / M.sum())
    sigma = -1e-3 * scale - 1e-12
    rng = np.random.default_rng(_EIGSH_SEED)
    v0 = rng.standard_normal(dim)
    vals = spla.eigsh(
        K,
        k=k,
        M=sp.diags(M).tocsc(),
        sigma=sigma,
        which="LM",
        v0=v0,
        return_eigenvectors=False,
        tol=1e-10,
    )
    return np.sort(np.asarray(vals, dtype=float))


def folded_matrices(graph: PeriodCellGraph, theta: Sequence[complex]) -> tuple[sp.csr_matrix, np.ndarray]:
    """Hermitian folded stiffness and folded diagonal mass for a character
    theta on the torus (|theta_d| = 1)."""
    theta = np.asarray(theta, dtype=complex)
    if len(theta) != graph.ndim:
        raise GapForgeError(f"theta must have {graph.ndim} components")
    if np.any(np.abs(np.abs(theta) - 1.0) > 1e-12):
        raise GapForgeError("theta components must have unit modulus")
    rep, shift, dim = graph.fold_structure()
    ph = np.prod(np.conj(theta)[None, :] ** shift, axis=1)
    a = graph.edges[:, 0]
    b = graph.edges[:, 1]
    w = graph.weights
    ra, rb = rep[a], rep[b]
    cross = -w * np.conj(ph[a]) * ph[b]
    rows = np.concatenate([ra, rb, ra, rb])
    cols = np.concatenate([ra, rb, rb, ra])
    data = np.concatenate([w.astype(complex), w.astype(complex), cross, np.conj(cross)])
    K = sp.coo_matrix((data, (rows, cols)), shape=(dim, dim)).tocsr()
    # duplicate-summation order can differ between (i, j) and (j, i) when
    # several folded edges land on one entry; (K + K^H)/2 is exactly
    # Hermitian in floating point and within one ulp of the raw sum
    K = (K + K.conj().T) * 0.5
    M = np.bincount(rep, weights=graph.masses, minlength=dim)
    return K, M


def theta_spectrum(graph: PeriodCellGraph, theta: Sequence[complex], k: int) -> np.ndarray:
    """First k eigenvalues of the theta-periodic cell problem, ascending,
    repeated by multiplicity."""
    K, M = folded_matrices(graph, theta)
    return _smallest_eigenvalues(K, M, k)


def theta_grid(resolution: int, ndim: int) -> list[tuple[complex, ...]]:
    """Uniform character grid {exp(2 pi i p / resolution)}^ndim in a fixed
    deterministic order."""
    if resolution < 2:
        raise GapForgeError("theta resolution must be >= 2")
    roots = [complex(math.cos(2 * math.pi * p / resolution), math.sin(2 * math.pi * p / resolution)) for p in range(resolution)]
    return [tuple(c) for c in product(roots, repeat=ndim)]


@dataclass(frozen=True)
class BandStructure:
    theta_points: tuple[tuple[complex, ...], ...]
    eigen_table: np.ndarray  # (num theta, K)
    bands: tuple[tuple[float, float], ...]
    gaps: IntervalSet

    def to_csv_lines(self) -> list[str]:
        ndim = len(self.theta_points[0])
        header = ["theta_index"] + [f"theta_{d + 1}" for d in range(ndim)] + ["k", "lambda"]
        rows = []
        for ti, (point, lams) in enumerate(zip(self.theta_points, self.eigen_table)):
            args = [math.atan2(c.imag, c.real) for c in point]
            for kk, lam in enumerate(lams, start=1):
                rows.append([ti, *args, kk, float(lam)])
        return csv_lines(header, rows)


def _parallel_width() -> int:
    raw = os.environ.get("GAPFORGE_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def band_structure(graph: PeriodCellGraph, theta_resolution: int, K: int) -> BandStructure:
    """Sweep the character grid; band k is [min_theta, max_theta] of the
    k-th eigenvalue.  Sampled bands only widen under grid refinement, so
    the detected gaps are conservative."""
    points = theta_grid(theta_resolution, graph.ndim)
    graph.fold_structure()  # build once before any parallel sweep
    width = _parallel_width()
    if width > 1:
        with ThreadPoolExecutor(max_workers=width) as pool:
            table = list(pool.map(lambda t: theta_spectrum(graph, t, K), points))
    else:
        table = [theta_spectrum(graph, t, K) for t in points]
    eigen_table = np.vstack(table)
    bands = tuple(
        (float(eigen_table[:, kk].min()), float(eigen_table[:, kk].max())) for kk in range(K)
    )
    gaps = _complement_of_bands(bands, bands[-1][1])
    return BandStructure(tuple(points), eigen_table, bands, gaps)


def _complement_of_bands(bands: Sequence[tuple[float, float]], top: float) -> IntervalSet:
    merged: list[list[float]] = []
    for lo, hi in sorted(bands):
        if merged and lo - merged[-1][1] <= ENDPOINT_TOL:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    gaps: list[tuple[float, float]] = []
    cursor = 0.0
    for lo, hi in merged:
        # dedup tolerance also guards against a hair-width leading gap when
        # the first band edge computes to +epsilon instead of 0
        if lo > cursor + ENDPOINT_TOL and lo <= top:
            gaps.append((cursor, min(lo, top)))
        cursor = max(cursor, hi)
        if cursor >= top:
            break
    return IntervalSet(tuple(gaps))


def detect_gaps(bs: BandStructure, L: float) -> IntervalSet:
    """Open gaps strictly inside [0, min(L, b_K)]; nothing is reported
    above the last computed band (unknown territory)."""
    top = min(float(L), bs.bands[-1][1])
    return _complement_of_bands(bs.bands, top)


@dataclass(frozen=True)
class EnclosureReport:
    neumann: np.ndarray
    dirichlet: np.ndarray
    enclosure_ok: bool


def neumann_spectrum(graph: PeriodCellGraph, k: int) -> np.ndarray:
    """Unfolded cell with free boundary pairs (both copies kept)."""
    a, b = graph.edges[:, 0], graph.edges[:, 1]
    w = graph.weights.astype(complex)
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([a, b, b, a])
    data = np.concatenate([w, w, -w, -w])
    K = sp.coo_matrix((data, (rows, cols)), shape=(graph.nv, graph.nv)).tocsr()
    return _smallest_eigenvalues(K, graph.masses, k)


def dirichlet_spectrum(graph: PeriodCellGraph, k: int) -> np.ndarray:
    """Cell with every face vertex clamped to zero."""
    clamped = np.zeros(graph.nv, dtype=bool)
    for va, vb, _ in graph.boundary_pairs:
        clamped[va] = clamped[vb] = True
    keep = ~clamped
    new_id = -np.ones(graph.nv, dtype=int)
    new_id[keep] = np.arange(int(keep.sum()))
    rows_l, cols_l, data_l = [], [], []
    for (a, b), w in zip(graph.edges, graph.weights):
        ia, ib = new_id[a], new_id[b]
        if ia >= 0:
            rows_l.append(ia)
            cols_l.append(ia)
            data_l.append(w)
        if ib >= 0:
            rows_l.append(ib)
            cols_l.append(ib)
            data_l.append(w)
        if ia >= 0 and ib >= 0:
            rows_l.extend([ia, ib])
            cols_l.extend([ib, ia])
            data_l.extend([-w, -w])
    dim = int(keep.sum())
    K = sp.coo_matrix(
        (np.asarray(data_l, dtype=complex), (rows_l, cols_l)), shape=(dim, dim)
    ).tocsr()
    return _smallest_eigenvalues(K, graph.masses[keep], k)


def nd_enclosure(graph: PeriodCellGraph, k: int, theta_resolution: int = 8) -> EnclosureReport:
    """Check lambda_k^N <= lambda_k^theta <= lambda_k^D over the sampled
    character grid (slack ENCLOSURE_SLACK)."""
    neu = neumann_spectrum(graph, k)
    diri = dirichlet_spectrum(graph, k)
    ok = True
    for point in theta_grid(theta_resolution, graph.ndim):
        lam = theta_spectrum(graph, point, k)
        if np.any(lam < neu - ENCLOSURE_SLACK) or np.any(lam > diri + ENCLOSURE_SLACK):
            ok = False
            break
    return EnclosureReport(neu, diri, ok)
