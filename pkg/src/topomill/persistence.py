"""Vietoris-Rips persistent homology in dimensions 0-2.

The filtration is built from the pairwise distance matrix: a simplex enters at
the largest pairwise distance among its vertices.  Simplices are ordered by
(filtration value, dimension, lexicographic vertex order) and the boundary
matrix is reduced over the two-element field, one dimension at a time from the
top down so that columns already known to reduce to zero can be cleared.

By default the filtration is truncated at the enclosing radius
min_i max_j d(i, j); past that radius the complex is a cone, so diagrams in
every dimension are unchanged by the truncation while the simplex count drops
sharply for concentrated clouds.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit
from scipy.spatial.distance import pdist, squareform

from .signal_prep import PointCloud

DEFAULT_MAX_POINTS = 300


@dataclass
class PersistenceDiagram:
    """Multiset of (birth, death) pairs of one homology dimension.

    ``pairs`` is a (k, 2) float array sorted by (birth, death); deaths may be
    ``inf`` for essential classes.  Zero-persistence pairs are never stored.
    """

    dimension: int
    pairs: np.ndarray

    def __post_init__(self):
        self.pairs = np.asarray(self.pairs, dtype=np.float64).reshape(-1, 2)
        if self.dimension < 0:
            raise ValueError("dimension must be non-negative")
        if self.pairs.size:
            if np.any(self.pairs[:, 0] < 0) or np.any(np.isnan(self.pairs)):
                raise ValueError("births must be non-negative and finite")
            if not np.all(self.pairs[:, 0] < self.pairs[:, 1]):
                raise ValueError("every stored pair must satisfy birth < death")

    def __len__(self) -> int:
        return self.pairs.shape[0]

    def finite_pairs(self) -> np.ndarray:
        return self.pairs[np.isfinite(self.pairs[:, 1])]


def distance_matrix(pc) -> np.ndarray:
    """Pairwise Euclidean distance matrix of a point cloud."""
    points = pc.points if isinstance(pc, PointCloud) else np.asarray(pc, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 1:
        raise ValueError("need a non-empty (n, dim) point array")
    if points.shape[0] == 1:
        return np.zeros((1, 1))
    return squareform(pdist(points))


def enclosing_radius(dm: np.ndarray) -> float:
    """Smallest radius at which the complex becomes a cone over one point."""
    return float(np.min(np.max(dm, axis=1)))


@njit(cache=True, nogil=True)
def _count_triangles(d, thr):
    n = d.shape[0]
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            if d[i, j] > thr:
                continue
            for k in range(j + 1, n):
                if d[i, k] <= thr and d[j, k] <= thr:
                    count += 1
    return count


@njit(cache=True, nogil=True)
def _fill_triangles(d, thr, va, vb, vc, val):
    n = d.shape[0]
    idx = 0
    for i in range(n):
        for j in range(i + 1, n):
            dij = d[i, j]
            if dij > thr:
                continue
            for k in range(j + 1, n):
                dik = d[i, k]
                djk = d[j, k]
                if dik <= thr and djk <= thr:
                    va[idx] = i
                    vb[idx] = j
                    vc[idx] = k
                    m = dij
                    if dik > m:
                        m = dik
                    if djk > m:
                        m = djk
                    val[idx] = m
                    idx += 1


@njit(cache=True, nogil=True)
def _count_tetrahedra(d, thr):
    n = d.shape[0]
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            if d[i, j] > thr:
                continue
            for k in range(j + 1, n):
                if d[i, k] > thr or d[j, k] > thr:
                    continue
                for l in range(k + 1, n):
                    if d[i, l] <= thr and d[j, l] <= thr and d[k, l] <= thr:
                        count += 1
    return count


@njit(cache=True, nogil=True)
def _fill_tetrahedra(d, thr, va, vb, vc, vd, val):
    n = d.shape[0]
    idx = 0
    for i in range(n):
        for j in range(i + 1, n):
            dij = d[i, j]
            if dij > thr:
                continue
            for k in range(j + 1, n):
                dik = d[i, k]
                djk = d[j, k]
                if dik > thr or djk > thr:
                    continue
                m3 = dij
                if dik > m3:
                    m3 = dik
                if djk > m3:
                    m3 = djk
                for l in range(k + 1, n):
                    dil = d[i, l]
                    djl = d[j, l]
                    dkl = d[k, l]
                    if dil <= thr and djl <= thr and dkl <= thr:
                        va[idx] = i
                        vb[idx] = j
                        vc[idx] = k
                        vd[idx] = l
                        m = m3
                        if dil > m:
                            m = dil
                        if djl > m:
                            m = djl
                        if dkl > m:
                            m = dkl
                        val[idx] = m
                        idx += 1


@njit(cache=True, nogil=True)
def _reduce_boundary(faces, nrows, cleared):
    """Column reduction of one fixed-dimension boundary matrix over Z2.

    ``faces`` holds, per column (in filtration order), the sorted row indices
    of its boundary.  Columns flagged ``cleared`` are skipped.  Returns the
    persistence pairs (pivot row, column) and a creator flag per column for
    columns that reduced to zero.
    """
    ncols, width = faces.shape
    pivot_owner = np.full(nrows, -1, dtype=np.int64)
    store = np.empty(ncols * width + 16, dtype=np.int64)
    store_start = np.zeros(ncols, dtype=np.int64)
    store_len = np.zeros(ncols, dtype=np.int64)
    store_pos = 0
    pair_rows = np.empty(ncols, dtype=np.int64)
    pair_cols = np.empty(ncols, dtype=np.int64)
    n_pairs = 0
    creator = np.zeros(ncols, dtype=np.bool_)
    cur = np.empty(nrows + 1, dtype=np.int64)
    tmp = np.empty(nrows + 1, dtype=np.int64)

    for j in range(ncols):
        if cleared[j]:
            continue
        clen = width
        for q in range(width):
            cur[q] = faces[j, q]
        while clen > 0:
            piv = cur[clen - 1]
            owner = pivot_owner[piv]
            if owner == -1:
                pivot_owner[piv] = j
                if store_pos + clen > store.size:
                    new_cap = store.size * 2
                    while new_cap < store_pos + clen:
                        new_cap *= 2
                    new_store = np.empty(new_cap, dtype=np.int64)
                    new_store[:store_pos] = store[:store_pos]
                    store = new_store
                store_start[j] = store_pos
                store_len[j] = clen
                for q in range(clen):
                    store[store_pos + q] = cur[q]
                store_pos += clen
                pair_rows[n_pairs] = piv
                pair_cols[n_pairs] = j
                n_pairs += 1
                break
            # cur ^= reduced column of the pivot owner (sorted merge).
            a = 0
            b = store_start[owner]
            b_end = b + store_len[owner]
            t = 0
            while a < clen and b < b_end:
                va = cur[a]
                vb = store[b]
                if va < vb:
                    tmp[t] = va
                    a += 1
                    t += 1
                elif vb < va:
                    tmp[t] = vb
                    b += 1
                    t += 1
                else:
                    a += 1
                    b += 1
            while a < clen:
                tmp[t] = cur[a]
                a += 1
                t += 1
            while b < b_end:
                tmp[t] = store[b]
                b += 1
                t += 1
            swap = cur
            cur = tmp
            tmp = swap
            clen = t
        if clen == 0:
            creator[j] = True
    return pair_rows[:n_pairs], pair_cols[:n_pairs], creator


def _sorted_dimension(vertices: list, values: np.ndarray):
    """Filtration order within one dimension: by value, ties by vertex order.

    The enumeration order of ``vertices`` is lexicographic, so a stable sort
    on values realizes the (value, lexicographic) tie-break.  Returns the
    reordered vertex columns/values and the enumeration->row map.
    """
    order = np.argsort(values, kind="stable")
    inverse = np.empty(order.size, dtype=np.int64)
    inverse[order] = np.arange(order.size)
    return [v[order] for v in vertices], values[order], inverse


def _face_rows(face_encodings: np.ndarray, enc_sorted: np.ndarray,
               inverse: np.ndarray) -> np.ndarray:
    ids = np.searchsorted(enc_sorted, face_encodings)
    rows = inverse[ids]
    rows.sort(axis=1)
    return rows


def rips_persistence(dm: np.ndarray, max_dim: int = 2,
                     threshold: Optional[float] = None,
                     max_points: int = DEFAULT_MAX_POINTS,
                     return_stats: bool = False):
    """Persistence diagrams of the Rips filtration of a distance matrix.

    Parameters
    ----------
    dm : ndarray
        Symmetric distance matrix with zero diagonal and finite entries.
    max_dim : int
        Largest homology dimension to compute (0, 1 or 2); simplices one
        dimension higher are built to detect deaths.
    threshold : float, optional
        Filtration truncation radius.  ``None`` uses the enclosing radius,
        which leaves all diagrams exact.  Smaller values are allowed and may
        leave extra essential classes.
    max_points : int
        Guard against accidentally huge inputs; callers subsample first.
    return_stats : bool
        Also return simplex/essential counts (used by consistency checks).

    Returns
    -------
    list of PersistenceDiagram, one per dimension 0..max_dim, plus the stats
    dictionary when requested.
    """
    dm = np.asarray(dm, dtype=np.float64)
    n = dm.shape[0]
    if dm.ndim != 2 or dm.shape[0] != dm.shape[1]:
        raise ValueError("distance matrix must be square")
    if n > max_points:
        raise ValueError(f"{n} points exceed the cap {max_points}; subsample first")
    if not np.all(np.isfinite(dm)):
        raise ValueError("distance matrix must be finite")
    if np.any(dm < 0) or np.any(np.diag(dm) != 0) or not np.array_equal(dm, dm.T):
        raise ValueError("distance matrix must be symmetric, non-negative, zero-diagonal")
    if max_dim not in (0, 1, 2):
        raise ValueError("max_dim must be 0, 1 or 2")
    if threshold is None:
        threshold = enclosing_radius(dm)
    threshold = float(threshold)

    nf = np.float64(n)

    # --- simplex enumeration per dimension, in lexicographic vertex order ---
    iu, ju = np.triu_indices(n, k=1)
    edge_val = dm[iu, ju]
    keep = edge_val <= threshold
    e_i, e_j, edge_val = iu[keep], ju[keep], edge_val[keep]

    counts = {0: n, 1: e_i.size}
    simplices = {}

    vert_values = np.zeros(n)
    simplices[0] = ([np.arange(n)], vert_values, np.arange(n))

    (se_i, se_j), edge_val_sorted, edge_inv = _sorted_dimension([e_i, e_j], edge_val)
    simplices[1] = ([se_i, se_j], edge_val_sorted, edge_inv)
    edge_enc = e_i * nf + e_j  # enumeration order is ascending in this encoding

    if max_dim >= 1:
        n_tri = _count_triangles(dm, threshold)
        ta = np.empty(n_tri, dtype=np.int64)
        tb = np.empty(n_tri, dtype=np.int64)
        tc = np.empty(n_tri, dtype=np.int64)
        tv = np.empty(n_tri, dtype=np.float64)
        _fill_triangles(dm, threshold, ta, tb, tc, tv)
        counts[2] = n_tri
        (sta, stb, stc), tri_val_sorted, tri_inv = _sorted_dimension([ta, tb, tc], tv)
        simplices[2] = ([sta, stb, stc], tri_val_sorted, tri_inv)
        tri_enc = (ta * nf) * nf + tb * nf + tc

    if max_dim >= 2:
        n_tet = _count_tetrahedra(dm, threshold)
        qa = np.empty(n_tet, dtype=np.int64)
        qb = np.empty(n_tet, dtype=np.int64)
        qc = np.empty(n_tet, dtype=np.int64)
        qd = np.empty(n_tet, dtype=np.int64)
        qv = np.empty(n_tet, dtype=np.float64)
        _fill_tetrahedra(dm, threshold, qa, qb, qc, qd, qv)
        counts[3] = n_tet
        (sqa, sqb, sqc, sqd), tet_val_sorted, _ = _sorted_dimension(
            [qa, qb, qc, qd], qv)

    # --- top-down reduction with clearing ---
    pairs_by_dim = {}
    essential_by_dim = {}
    top_creator_count = 0

    cleared = {1: np.zeros(e_i.size, dtype=np.bool_)}
    if max_dim >= 1:
        cleared[2] = np.zeros(n_tri, dtype=np.bool_)

    if max_dim >= 2 and n_tet > 0:
        f_all = np.stack([
            (sqb * nf) * nf + sqc * nf + sqd,
            (sqa * nf) * nf + sqc * nf + sqd,
            (sqa * nf) * nf + sqb * nf + sqd,
            (sqa * nf) * nf + sqb * nf + sqc,
        ], axis=1)
        faces = _face_rows(f_all, tri_enc, tri_inv)
        rows3, cols3, creators3 = _reduce_boundary(
            faces, n_tri, np.zeros(n_tet, dtype=np.bool_))
        top_creator_count = int(np.sum(creators3))
        pairs_by_dim[2] = (tri_val_sorted[rows3], tet_val_sorted[cols3])
        cleared[2][rows3] = True
    elif max_dim >= 2:
        pairs_by_dim[2] = (np.empty(0), np.empty(0))

    if max_dim >= 1 and n_tri > 0:
        f_all = np.stack([stb * nf + stc, sta * nf + stc, sta * nf + stb], axis=1)
        faces = _face_rows(f_all, edge_enc, edge_inv)
        rows2, cols2, creators2 = _reduce_boundary(faces, e_i.size, cleared[2])
        pairs_by_dim[1] = (edge_val_sorted[rows2], tri_val_sorted[cols2])
        cleared[1][rows2] = True
        if max_dim >= 2:
            essential_by_dim[2] = creators2 & ~cleared[2]
    elif max_dim >= 1:
        pairs_by_dim[1] = (np.empty(0), np.empty(0))
        if max_dim >= 2:
            essential_by_dim[2] = np.zeros(0, dtype=np.bool_)

    if e_i.size > 0:
        faces = np.stack([se_i, se_j], axis=1).astype(np.int64)
        rows1, cols1, creators1 = _reduce_boundary(faces, n, cleared[1])
        pairs_by_dim[0] = (np.zeros(rows1.size), edge_val_sorted[cols1])
        vertex_paired = np.zeros(n, dtype=np.bool_)
        vertex_paired[rows1] = True
        essential_by_dim[0] = ~vertex_paired
        if max_dim >= 1:
            essential_by_dim[1] = creators1 & ~cleared[1]
    else:
        pairs_by_dim[0] = (np.empty(0), np.empty(0))
        essential_by_dim[0] = np.ones(n, dtype=np.bool_)
        if max_dim >= 1:
            essential_by_dim[1] = np.zeros(0, dtype=np.bool_)

    # --- assemble diagrams ---
    diagrams = []
    essential_counts = {}
    for k in range(0, max_dim + 1):
        births, deaths = pairs_by_dim.get(k, (np.empty(0), np.empty(0)))
        finite = np.stack([births, deaths], axis=1) if births.size else np.empty((0, 2))
        if finite.size:
            finite = finite[finite[:, 0] < finite[:, 1]]
        ess_mask = essential_by_dim.get(k)
        n_ess = int(np.sum(ess_mask)) if ess_mask is not None else 0
        essential_counts[k] = n_ess
        if n_ess:
            if k == 0:
                ess_births = np.zeros(n_ess)
            else:
                ess_births = simplices[k][1][ess_mask]
            ess = np.stack([ess_births, np.full(n_ess, np.inf)], axis=1)
            finite = np.vstack([finite, ess])
        if finite.size:
            order = np.lexsort((finite[:, 1], finite[:, 0]))
            finite = finite[order]
        diagrams.append(PersistenceDiagram(dimension=k, pairs=finite))

    if return_stats:
        stats = {
            "simplex_counts": counts,
            "essential_counts": essential_counts,
            "top_creator_count": top_creator_count,
            "threshold": threshold,
        }
        return diagrams, stats
    return diagrams


def write_diagrams_csv(path, entries) -> None:
    """Write diagrams as CSV rows (series_id, dim, birth, death); inf death
    is encoded as the literal token "inf"."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series_id", "dim", "birth", "death"])
        for series_id, diagrams in entries:
            for dgm in diagrams:
                for birth, death in dgm.pairs:
                    death_txt = "inf" if np.isinf(death) else repr(float(death))
                    writer.writerow([series_id, dgm.dimension, repr(float(birth)), death_txt])


def read_diagrams_csv(path) -> dict:
    """Inverse of :func:`write_diagrams_csv`: {series_id: {dim: (k, 2) array}}."""
    by_series: dict = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            sid = row["series_id"]
            dim = int(row["dim"])
            death = np.inf if row["death"] == "inf" else float(row["death"])
            by_series.setdefault(sid, {}).setdefault(dim, []).append(
                (float(row["birth"]), death))
    return {
        sid: {dim: np.array(pairs, dtype=np.float64).reshape(-1, 2)
              for dim, pairs in dims.items()}
        for sid, dims in by_series.items()
    }
