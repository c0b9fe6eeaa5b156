"""Areal adjacency structure: the W, D and R matrices behind every CAR prior."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class GraphError(ValueError):
    """Raised for invalid edge lists or degenerate graphs."""


@dataclass(frozen=True)
class ArealGraph:
    """Partition of a study region into areal units plus rook/queen adjacency.

    Edges are stored as sorted 1-based pairs; instances are immutable and can
    be shared freely across parallel workers.  Use :meth:`from_edge_list`,
    :meth:`lattice` or :meth:`from_file` instead of the raw constructor.
    """

    num_areas: int
    edges: tuple[tuple[int, int], ...]
    neighbor_counts: np.ndarray = field(repr=False)
    area_labels: tuple[str, ...] | None = None

    # ------------------------------------------------------------------
    @classmethod
    def from_edge_list(
        cls,
        edges,
        num_areas: int,
        area_labels=None,
    ) -> "ArealGraph":
        """Build a graph from (i, k) 1-based pairs, deduplicating orientation."""
        if num_areas < 2:
            raise GraphError(f"need at least 2 areas, got {num_areas}")
        canon = set()
        for i, k in edges:
            i, k = int(i), int(k)
            if i == k:
                raise GraphError(f"self-loop on area {i}")
            if not (1 <= i <= num_areas and 1 <= k <= num_areas):
                raise GraphError(f"edge ({i},{k}) out of range [1,{num_areas}]")
            canon.add((min(i, k), max(i, k)))
        ordered = tuple(sorted(canon))
        counts = np.zeros(num_areas, dtype=np.int64)
        for i, k in ordered:
            counts[i - 1] += 1
            counts[k - 1] += 1
        counts.setflags(write=False)
        if area_labels is not None:
            area_labels = tuple(area_labels)
            if len(area_labels) != num_areas:
                raise GraphError("label count does not match num_areas")
        return cls(num_areas, ordered, counts, area_labels)

    @classmethod
    def lattice(cls, rows: int, cols: int) -> "ArealGraph":
        """Rook-adjacency lattice with ``rows * cols`` areas."""
        if rows < 1 or cols < 1 or rows * cols < 2:
            raise GraphError(f"degenerate lattice {rows}x{cols}")
        idx = lambda r, c: r * cols + c + 1
        edges = []
        for r in range(rows):
            for c in range(cols):
                if c + 1 < cols:
                    edges.append((idx(r, c), idx(r, c + 1)))
                if r + 1 < rows:
                    edges.append((idx(r, c), idx(r + 1, c)))
        return cls.from_edge_list(edges, rows * cols)

    @classmethod
    def from_file(cls, path, num_areas: int | None = None, labels_path=None) -> "ArealGraph":
        """Read a whitespace-separated edge list (1-based, ``#`` comments)."""
        edges = []
        max_idx = 0
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphError(f"{path}:{lineno}: expected 'i k', got {line!r}")
            i, k = int(parts[0]), int(parts[1])
            max_idx = max(max_idx, i, k)
            edges.append((i, k))
        labels = None
        if labels_path is not None:
            labels = [ln.strip() for ln in Path(labels_path).read_text().splitlines() if ln.strip()]
        n = num_areas if num_areas is not None else max_idx
        return cls.from_edge_list(edges, n, area_labels=labels)

    # ------------------------------------------------------------------
    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def proximity_matrix(self) -> np.ndarray:
        """Binary W with zero diagonal."""
        W = np.zeros((self.num_areas, self.num_areas))
        for i, k in self.edges:
            W[i - 1, k - 1] = 1.0
            W[k - 1, i - 1] = 1.0
        return W

    def structure_matrix(self) -> np.ndarray:
        """R = D - W; symmetric PSD with zero row sums."""
        R = -self.proximity_matrix()
        R[np.diag_indices(self.num_areas)] = self.neighbor_counts.astype(float)
        return R

    def adjacency_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Neighbor lists as (indptr, indices) in 0-based CSR layout."""
        nbrs = [[] for _ in range(self.num_areas)]
        for i, k in self.edges:
            nbrs[i - 1].append(k - 1)
            nbrs[k - 1].append(i - 1)
        indptr = np.zeros(self.num_areas + 1, dtype=np.int64)
        for i, ns in enumerate(nbrs):
            indptr[i + 1] = indptr[i] + len(ns)
        indices = np.fromiter(
            (k for ns in nbrs for k in sorted(ns)), dtype=np.int64, count=indptr[-1]
        )
        return indptr, indices

    def is_connected(self) -> bool:
        indptr, indices = self.adjacency_csr()
        seen = np.zeros(self.num_areas, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            v = stack.pop()
            for u in indices[indptr[v] : indptr[v + 1]]:
                if not seen[u]:
                    seen[u] = True
                    stack.append(int(u))
        return bool(seen.all())


def spain_provinces() -> ArealGraph:
    """The 47 peninsular Spanish provinces (shipped demonstration map)."""
    from importlib import resources

    data = resources.files("carsmooth.data")
    with resources.as_file(data / "spain_provinces_47.txt") as edges, resources.as_file(
        data / "spain_provinces_47_labels.txt"
    ) as labels:
        return ArealGraph.from_file(edges, num_areas=47, labels_path=labels)
