"""Level-set graph clustering on PLLS scores.

Pipeline: symmetrized k_G-NN graph over all points, node-induced
subgraph on scores >= lambda, connected components, dissolution of
undersized components, then 1-NN assignment of the remaining points to
the nearest surviving core point.  Everything is deterministic for a
fixed seed; component IDs follow each component's smallest member index
and final labels are ordered by descending cluster size.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _cc

from .bagging import BaggingPlan, bagged_k_distance
from .knn import SpatialIndex
from .plls import PllsScores, empirical_plls, mode_set


@dataclass(frozen=True)
class BdmbcConfig:
    """The six hyperparameters plus seed and minimum cluster size.

    Subsample size comes from rho (s = ceil(rho * n)) unless s is given
    explicitly.  min_cluster_size defaults to 2 * k_g.
    """

    k_d: int
    k_l: int
    b: int = 10
    rho: float = 0.1
    s: int | None = None
    k_g: int = 15
    lam: float = 0.5
    min_cluster_size: int | None = None
    seed: int = 0

    def subsample_size(self, n):
        if self.s is not None:
            return self.s
        return int(np.ceil(self.rho * n))

    def effective_min_cluster_size(self):
        return self.min_cluster_size if self.min_cluster_size is not None else 2 * self.k_g

    def validate(self, n):
        s = self.subsample_size(n)
        if self.b < 1:
            raise ValueError("b must be >= 1")
        if self.s is None and not 0.0 < self.rho <= 1.0:
            raise ValueError(f"rho={self.rho} must lie in (0, 1]")
        if not 1 <= s <= n:
            raise ValueError(f"subsample size s={s} out of range [1, {n}]")
        if not 1 <= self.k_d < s:
            raise ValueError(f"k_d must be smaller than subsample size (k_d={self.k_d}, s={s})")
        if not 1 <= self.k_l <= n - 1:
            raise ValueError(f"k_l={self.k_l} out of range [1, {n - 1}]")
        if not 1 <= self.k_g <= n - 1:
            raise ValueError(f"k_g={self.k_g} out of range [1, {n - 1}]")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda={self.lam} must lie in [0, 1]")
        if self.effective_min_cluster_size() < 1:
            raise ValueError("min_cluster_size must be >= 1")

    def to_dict(self, n=None):
        d = {
            "b": self.b,
            "rho": self.rho,
            "s": self.s if self.s is not None else (self.subsample_size(n) if n else None),
            "kd": self.k_d,
            "kl": self.k_l,
            "kg": self.k_g,
            "lambda": self.lam,
            "min_cluster_size": self.effective_min_cluster_size(),
            "seed": self.seed,
        }
        return d


@dataclass(frozen=True)
class NeighborGraph:
    """Symmetrized k_G-NN graph: undirected edges (i, j) with i < j."""

    n: int
    edges: np.ndarray  # (m, 2) int64, lexicographically sorted, unique


@dataclass(frozen=True)
class CoreSubgraph:
    """Node-induced subgraph on the core mask."""

    node_mask: np.ndarray
    edges: np.ndarray


@dataclass(frozen=True)
class ClusterResult:
    labels: np.ndarray
    core_mask: np.ndarray
    modes: np.ndarray
    num_clusters: int
    plls: np.ndarray
    config: dict
    timings: dict = field(default_factory=dict)

    def to_json_dict(self):
        """The stable on-disk schema (timings stay out on purpose)."""
        return {
            "labels": self.labels.tolist(),
            "modes": self.modes.tolist(),
            "core": self.core_mask.astype(int).tolist(),
            "num_clusters": int(self.num_clusters),
            "plls": self.plls.tolist(),
            "config": self.config,
        }


def build_kg_graph(idx, k_g):
    """Union-symmetrized k_g-NN graph under the (distance, index) tie rule."""
    n = idx.n
    if not 1 <= k_g <= n - 1:
        raise ValueError(f"k_g={k_g} out of range [1, {n - 1}]")
    nbr, _ = idx.query_bulk(idx.points, k_g, exclude=np.arange(n))
    src = np.repeat(np.arange(n, dtype=np.int64), k_g)
    dst = nbr.reshape(-1)
    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    edges = np.unique(np.column_stack([lo, hi]), axis=0)
    return NeighborGraph(n, edges)


def core_subgraph(graph, scores, lam):
    """Subgraph induced on points with score >= lam."""
    values = scores.values if isinstance(scores, PllsScores) else np.asarray(scores)
    if values.shape[0] != graph.n:
        raise ValueError("scores length must match graph size")
    mask = values >= lam
    if graph.edges.size:
        keep = mask[graph.edges[:, 0]] & mask[graph.edges[:, 1]]
        edges = graph.edges[keep]
    else:
        edges = graph.edges
    return CoreSubgraph(mask, edges)


def connected_components(sub):
    """Provisional labels on core points; -1 elsewhere.

    Component IDs are assigned in order of each component's smallest
    member index.
    """
    n = len(sub.node_mask)
    core = np.flatnonzero(sub.node_mask)
    labels = np.full(n, -1, dtype=np.int64)
    if core.size == 0:
        return labels
    remap = np.full(n, -1, dtype=np.int64)
    remap[core] = np.arange(core.size)
    if sub.edges.size:
        e = remap[sub.edges]
        adj = coo_matrix(
            (np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(core.size, core.size)
        )
    else:
        adj = coo_matrix((core.size, core.size))
    _, comp = _cc(adj, directed=False)
    # relabel so that component IDs follow smallest member (core is sorted
    # ascending, so first occurrence order is smallest-index order)
    _, first = np.unique(comp, return_index=True)
    order = np.argsort(first)
    new_id = np.empty_like(order)
    new_id[order] = np.arange(len(order))
    labels[core] = new_id[comp]
    return labels


def finalize(ds, idx, provisional, core_mask, min_cluster_size):
    """Dissolve undersized components and 1-NN-assign non-core points.

    Returns (labels, final_core_mask, num_clusters) with labels reordered
    by descending cluster size (ties by smallest member index).
    """
    points = ds.points if hasattr(ds, "points") else np.asarray(ds, dtype=np.float64)
    n = points.shape[0]
    labels = np.asarray(provisional).copy()
    core_mask = np.asarray(core_mask).copy()
    ids, sizes = np.unique(labels[labels >= 0], return_counts=True)
    for cid, size in zip(ids, sizes):
        if size < min_cluster_size:
            dissolved = labels == cid
            labels[dissolved] = -1
            core_mask[dissolved] = False
    core = np.flatnonzero(core_mask)
    if core.size == 0:
        return np.zeros(n, dtype=np.int64), core_mask, 1
    # compact surviving IDs, then reorder by (descending size, smallest member)
    ids = np.unique(labels[core])
    labels[core] = np.searchsorted(ids, labels[core])
    non_core = np.flatnonzero(~core_mask)
    if non_core.size:
        # core indices are ascending, so subsample-local tie order equals
        # the global index tie rule
        core_index = SpatialIndex(points[core])
        nearest, _ = core_index.query_bulk(points[non_core], 1)
        labels[non_core] = labels[core[nearest[:, 0]]]
    num = len(ids)
    sizes = np.bincount(labels, minlength=num)
    first_member = np.full(num, n, dtype=np.int64)
    np.minimum.at(first_member, labels, np.arange(n))
    order = np.lexsort((first_member, -sizes))
    rank = np.empty(num, dtype=np.int64)
    rank[order] = np.arange(num)
    return rank[labels], core_mask, num


def bdmbc_fit(ds, config, index=None):
    """Run the full pipeline on a dataset; deterministic for a fixed seed."""
    points = ds.points if hasattr(ds, "points") else np.asarray(ds, dtype=np.float64)
    n = points.shape[0]
    if n == 1:
        return ClusterResult(
            labels=np.zeros(1, dtype=np.int64),
            core_mask=np.zeros(1, dtype=bool),
            modes=np.zeros(0, dtype=np.int64),
            num_clusters=1,
            plls=np.ones(1),
            config=config.to_dict(n),
            timings={},
        )
    config.validate(n)
    timings = {}
    t0 = time.perf_counter()
    idx = index if index is not None else SpatialIndex(points)
    timings["index"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    plan = BaggingPlan(b=config.b, s=config.subsample_size(n), k_d=config.k_d, seed=config.seed)
    bagged = bagged_k_distance(points, plan, index=idx)
    timings["bagged_kdist"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    scores = empirical_plls(points, idx, bagged, config.k_l)
    timings["plls"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    graph = build_kg_graph(idx, config.k_g)
    timings["graph"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    sub = core_subgraph(graph, scores, config.lam)
    provisional = connected_components(sub)
    timings["components"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    labels, final_core, num = finalize(
        points, idx, provisional, sub.node_mask, config.effective_min_cluster_size()
    )
    timings["finalize"] = time.perf_counter() - t0

    modes = mode_set(scores)
    modes = modes[final_core[modes]]  # modes in dissolved components drop out
    return ClusterResult(
        labels=labels,
        core_mask=final_core,
        modes=modes,
        num_clusters=num,
        plls=scores.values,
        config=config.to_dict(n),
        timings=timings,
    )
