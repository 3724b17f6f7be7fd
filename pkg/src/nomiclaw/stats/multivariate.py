"""PCA on standardized metrics and Ward agglomerative clustering."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass
class PcaResult:
    columns: list[str]
    loadings: np.ndarray  # metrics x components
    scores: np.ndarray  # units x components
    variance_explained: np.ndarray
    eigenvalues: np.ndarray
    standardized: np.ndarray
    dropped: list[str]

    def reconstruct(self) -> np.ndarray:
        return self.scores @ self.loadings.T


def standardize(data: np.ndarray, columns: Sequence[str] | None = None) -> tuple[np.ndarray, list[str], list[str]]:
    data = np.asarray(data, dtype=float)
    columns = list(columns) if columns is not None else [f"m{j}" for j in range(data.shape[1])]
    sd = data.std(axis=0, ddof=1)
    keep = sd > 1e-12
    dropped = [c for c, k in zip(columns, keep) if not k]
    if dropped:
        warnings.warn(f"dropping zero-variance columns: {dropped}", stacklevel=3)
    z = (data[:, keep] - data[:, keep].mean(axis=0)) / sd[keep]
    return z, [c for c, k in zip(columns, keep) if k], dropped


def pca(data: np.ndarray, columns: Sequence[str] | None = None) -> PcaResult:
    """Eigen-decomposition of the correlation matrix of ``data`` (units x metrics)."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ValueError("need at least two units")
    if data.shape[1] < 2:
        raise ValueError("need at least two metrics")
    z, kept, dropped = standardize(data, columns)
    corr = z.T @ z / (z.shape[0] - 1)
    vals, vecs = np.linalg.eigh(corr)
    order = np.argsort(vals)[::-1]
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order]
    for j in range(vecs.shape[1]):
        if vecs[np.argmax(np.abs(vecs[:, j])), j] < 0:
            vecs[:, j] *= -1
    return PcaResult(
        columns=kept,
        loadings=vecs,
        scores=z @ vecs,
        variance_explained=vals / vals.sum(),
        eigenvalues=vals,
        standardized=z,
        dropped=dropped,
    )


@dataclass
class ClusterTree:
    """Merge sequence in the usual linkage layout.

    Row ``i`` of ``merges`` joins clusters ``a`` and ``b`` (leaves are
    ``0..n-1``, the cluster made at step ``i`` is ``n+i``) at ``height``,
    the increase in within-cluster sum of squares, producing ``size`` units.
    """

    n: int
    merges: np.ndarray  # (n-1) x 4: a, b, height, size

    @property
    def heights(self) -> np.ndarray:
        return self.merges[:, 2]

    def members(self) -> dict[int, list[int]]:
        out = {i: [i] for i in range(self.n)}
        for i, (a, b, _, _) in enumerate(self.merges):
            out[self.n + i] = sorted(out[int(a)] + out[int(b)])
        return out


def ward_cluster(data: np.ndarray) -> ClusterTree:
    """Minimum-variance agglomeration with Lance-Williams updates.

    Ties go to the pair whose smallest member indices are lowest.
    """
    x = np.asarray(data, dtype=float)
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least two units")
    diff = x[:, None, :] - x[None, :, :]
    d = 0.5 * np.einsum("ijk,ijk->ij", diff, diff)
    active = {i: (i, 1, i) for i in range(n)}  # slot -> (cluster id, size, min member)
    dist = {(i, j): d[i, j] for i in range(n) for j in range(i + 1, n)}
    merges = []
    for step in range(n - 1):
        best = None
        for (i, j), h in dist.items():
            key = (h, *sorted((active[i][2], active[j][2])))
            if best is None or key < best[0]:
                best = (key, i, j)
        (h, _, _), i, j = best
        ci, ni, mi = active[i]
        cj, nj, mj = active[j]
        merges.append((min(ci, cj), max(ci, cj), h, ni + nj))
        del active[j]
        active[i] = (n + step, ni + nj, min(mi, mj))
        new = {}
        for (a, b), v in dist.items():
            if i in (a, b) or j in (a, b):
                continue
            new[(a, b)] = v
        for k in active:
            if k == i:
                continue
            nk = active[k][1]
            dki = dist[tuple(sorted((k, i)))]
            dkj = dist[tuple(sorted((k, j)))]
            val = ((ni + nk) * dki + (nj + nk) * dkj - nk * h) / (ni + nj + nk)
            new[tuple(sorted((k, i)))] = val
        dist = new
    return ClusterTree(n, np.array(merges, dtype=float))


def cut(tree: ClusterTree, k: int) -> np.ndarray:
    """Flat labels ``0..k-1`` from undoing the last ``k-1`` merges."""
    if not 1 <= k <= tree.n:
        raise ValueError("k out of range")
    members = tree.members()
    roots = {2 * tree.n - 2} if tree.n > 1 else {0}
    for i in range(tree.n - 2, tree.n - 1 - k, -1):
        node = tree.n + i
        roots.discard(node)
        a, b = tree.merges[i, :2]
        roots |= {int(a), int(b)}
    labels = np.empty(tree.n, dtype=int)
    for label, root in enumerate(sorted(roots, key=lambda r: min(members[r]))):
        labels[members[root]] = label
    return labels
