"""Per-node stalks of persistent local homology and sheaf Laplacian blocks.

A vertex's stalk is the persistent relative cohomology of (S_t, S_t \\ st v)
computed on an excision-truncated neighborhood. For an adjacent pair (u, v)
an extended coboundary matrix is reduced to find pairs of stalk cocycles
whose sum vanishes on st u ∪ st v modulo coboundaries of the union's
lower simplices; each surviving reduced column is a rank-1 Laplacian atom
v_A v_B^T tagged with the interval on which the identification persists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .complexes import Filtration, star_of_vertices, truncate_neighborhood
from .errors import ContractError
from .linalg import Field, SparseColumnMatrix, reduce as column_reduce
from .persistence import (
    INF,
    PersistentCocycle,
    persistent_relative_cohomology,
)


@dataclass
class LocalStalk:
    """Persistent relative cocycles of one vertex's star.

    Representatives and indices are keyed by simplex ids of the *full*
    filtration (remapped from the truncation), so stalks from different
    vertices can meet inside one extended matrix. Degree-0 classes only
    flag isolated components and carry no sheaf structure at the orders
    the Laplacian couples, so stalks keep orders 1..max_order.
    """

    vertex: int
    cocycles: list[PersistentCocycle]
    truncation: Filtration
    horizon: float
    field_kind: str

    def order_cocycles(self, k: int) -> list[PersistentCocycle]:
        return [c for c in self.cocycles if c.order == k]

    def descriptors(self) -> list[tuple[int, float, float]]:
        """(order, birth, death_or_horizon) per cocycle, in stalk order."""
        return [(c.order, c.birth, c.death_or(self.horizon)) for c in self.cocycles]


def _remap_cocycle(c: PersistentCocycle, new_to_old: dict[int, int]) -> PersistentCocycle:
    return PersistentCocycle(
        order=c.order,
        birth=c.birth,
        death=c.death,
        birth_index=new_to_old[c.birth_index],
        death_index=None if c.death_index is None else new_to_old[c.death_index],
        representative={new_to_old[i]: v for i, v in c.representative.items()},
        coboundary={new_to_old[i]: v for i, v in c.coboundary.items()},
    )


def compute_stalk(
    filtration: Filtration,
    vertex: int,
    max_order: int,
    rings: int = 1,
    fld: Field = Field(),
) -> LocalStalk:
    """Stalk of `vertex`: relative persistence of its star on a truncation.

    By excision the result is identical to the full-complex computation;
    the truncation only bounds the work per node.
    """
    if not (0 <= vertex < filtration.vertex_count):
        raise ContractError(f"vertex {vertex} does not exist")
    truncation, idmap, open_image = truncate_neighborhood(filtration, [vertex], rings)
    diagram = persistent_relative_cohomology(truncation, open_image, max_order, fld)
    new_to_old = {new: old for old, new in idmap.items()}
    cocycles = [
        _remap_cocycle(c, new_to_old) for c in diagram.classes if c.order >= 1
    ]
    cocycles.sort(key=lambda c: (c.order, c.birth, c.birth_index))
    return LocalStalk(
        vertex=vertex,
        cocycles=cocycles,
        truncation=truncation,
        horizon=filtration.t_plus,
        field_kind=fld.kind,
    )


@dataclass
class ExtendedCoboundaryMatrix:
    """Block matrix [B_D | B_AB] whose reduction couples two stalks.

    Row groups: "k" rows are k-simplices of D' = st u ∪ st v (carrying
    representatives and coboundary corrections), "A"/"B" rows are
    (k+1)-simplices of st u / st v (carrying each cocycle's coboundary; a
    (k+1)-simplex of the intersection appears once in each group).
    Rows sort by decreasing filtration index, columns by decreasing weight
    (B_D) / decreasing birth with ties broken by (owner, position) (B_AB).
    """

    matrix: SparseColumnMatrix
    row_meta: list[tuple[str, int]]
    col_meta: list[tuple]
    n_d_cols: int
    order: int

    def rows_in_group(self, group: str) -> int:
        return sum(1 for g, _ in self.row_meta if g == group)


def build_extended_matrix(
    stalk_u: LocalStalk,
    stalk_v: LocalStalk,
    filtration: Filtration,
    k: int,
    fld: Field = Field(),
) -> ExtendedCoboundaryMatrix:
    u, v = stalk_u.vertex, stalk_v.vertex
    if (min(u, v), max(u, v)) not in filtration.index:
        raise ContractError(f"vertices {u} and {v} are not adjacent (empty intersection)")

    a_ids = star_of_vertices(filtration, [u]).ids
    b_ids = star_of_vertices(filtration, [v]).ids
    d_ids = a_ids | b_ids

    rows: list[tuple[str, int]] = []
    rows += [("k", sid) for sid in d_ids if len(filtration.simplices[sid]) == k + 1]
    rows += [("A", sid) for sid in a_ids if len(filtration.simplices[sid]) == k + 2]
    rows += [("B", sid) for sid in b_ids if len(filtration.simplices[sid]) == k + 2]
    group_rank = {"k": 0, "A": 1, "B": 2}
    rows.sort(key=lambda gr: (-gr[1], group_rank[gr[0]]))
    row_pos = {gr: i for i, gr in enumerate(rows)}

    d_cols = sorted(
        (sid for sid in d_ids if len(filtration.simplices[sid]) == k),
        key=lambda sid: -sid,
    )
    ab_cols = [("A", u, pos, c) for pos, c in enumerate(stalk_u.order_cocycles(k))]
    ab_cols += [("B", v, pos, c) for pos, c in enumerate(stalk_v.order_cocycles(k))]
    ab_cols.sort(key=lambda item: (-item[3].birth, item[1], item[2]))

    entries = []
    col_meta: list[tuple] = []
    for j, sid in enumerate(d_cols):
        col_meta.append(("D", sid))
        for coface, sign in filtration.cofacets(sid):
            pos = row_pos.get(("k", coface))
            if pos is not None:
                entries.append((pos, j, sign))
    for jj, (side, owner, pos, c) in enumerate(ab_cols):
        j = len(d_cols) + jj
        col_meta.append((side, owner, pos))
        for sid, coeff in c.representative.items():
            entries.append((row_pos[("k", sid)], j, coeff))
        for sid, coeff in c.coboundary.items():
            entries.append((row_pos[(side, sid)], j, coeff))

    matrix = SparseColumnMatrix.from_entries(
        len(rows), len(d_cols) + len(ab_cols), entries, field=fld
    )
    return ExtendedCoboundaryMatrix(
        matrix=matrix,
        row_meta=rows,
        col_meta=col_meta,
        n_d_cols=len(d_cols),
        order=k,
    )


@dataclass(frozen=True)
class LaplacianAtom:
    """One rank-1 contribution v_A v_B^T valid on [start, end)."""

    start: float
    end: float  # math.inf for essential atoms
    v_a: dict[int, object]  # stalk_u order-k cocycle position -> coefficient
    v_b: dict[int, object]


@dataclass
class SheafLaplacianBlock:
    """All atoms coupling the order-k stalks of an adjacent pair (u, v)."""

    u: int
    v: int
    order: int
    atoms: list[LaplacianAtom]
    intervals_u: list[tuple[float, float]]  # (birth, death) per u stalk cocycle
    intervals_v: list[tuple[float, float]]
    horizon: float

    @property
    def dim_u(self) -> int:
        return len(self.intervals_u)

    @property
    def dim_v(self) -> int:
        return len(self.intervals_v)

    def entry_interval(self, atom: LaplacianAtom, a: int, b: int) -> tuple[float, float]:
        """Intersection of the atom interval with both cocycle lifespans."""
        lo = max(atom.start, self.intervals_u[a][0], self.intervals_v[b][0])
        hi = min(atom.end, self.intervals_u[a][1], self.intervals_v[b][1])
        return lo, hi


def _combined_support_min(
    stalk: LocalStalk,
    k: int,
    coeffs: dict[int, object],
    filtration: Filtration,
    fld: Field,
) -> float | None:
    """Lowest filtration value in the support of the combined cochain."""
    acc: dict[int, object] = {}
    order_cocycles = stalk.order_cocycles(k)
    for pos, c in coeffs.items():
        for sid, val in order_cocycles[pos].representative.items():
            acc[sid] = acc.get(sid, 0) + c * val
    support = [(sid, val) for sid, val in acc.items()]
    support = fld.prune(sorted(support))
    if not support:
        return None
    return min(filtration.values[sid] for sid, _ in support)


def sheaf_laplacian_block(
    stalk_u: LocalStalk,
    stalk_v: LocalStalk,
    filtration: Filtration,
    k: int,
    fld: Field = Field(),
) -> SheafLaplacianBlock:
    """Reduce the extended matrix and read off interval-tagged atoms.

    Every reduced B_AB column with both stalk parts nonzero and a nonempty
    validity interval yields one atom; the interval starts at the larger
    of the two combined-cocycle births and ends at the pivot's filtration
    value (never later than any involved cocycle's death). The column's
    B_D components are coboundary corrections and are discarded.
    """
    ext = build_extended_matrix(stalk_u, stalk_v, filtration, k, fld)
    red = column_reduce(ext.matrix)
    atoms: list[LaplacianAtom] = []
    for j in range(ext.n_d_cols, ext.matrix.col_count):
        v_a: dict[int, object] = {}
        v_b: dict[int, object] = {}
        for col_idx, coeff in red.V.cols[j]:
            meta = ext.col_meta[col_idx]
            if meta[0] == "A":
                v_a[meta[2]] = coeff
            elif meta[0] == "B":
                v_b[meta[2]] = coeff
        if not v_a or not v_b:
            continue
        rcol = red.R.cols[j]
        if rcol:
            end = filtration.values[ext.row_meta[rcol[-1][0]][1]]
        else:
            end = INF
        s_a = _combined_support_min(stalk_u, k, v_a, filtration, fld)
        s_b = _combined_support_min(stalk_v, k, v_b, filtration, fld)
        if s_a is None or s_b is None:
            continue
        start = max(s_a, s_b)
        if start >= end:
            continue
        atoms.append(LaplacianAtom(start=start, end=end, v_a=v_a, v_b=v_b))
    lifespan = lambda c: (c.birth, c.death_or(INF))
    return SheafLaplacianBlock(
        u=stalk_u.vertex,
        v=stalk_v.vertex,
        order=k,
        atoms=atoms,
        intervals_u=[lifespan(c) for c in stalk_u.order_cocycles(k)],
        intervals_v=[lifespan(c) for c in stalk_v.order_cocycles(k)],
        horizon=stalk_u.horizon,
    )


def _alive(interval: tuple[float, float], t: float) -> bool:
    return interval[0] <= t < interval[1]


def laplacian_at_time(block: SheafLaplacianBlock, t: float) -> np.ndarray:
    """Sum of atoms alive at t, with dead cocycle components zeroed."""
    out = np.zeros((block.dim_u, block.dim_v))
    for atom in block.atoms:
        if not (atom.start <= t < atom.end):
            continue
        va = np.zeros(block.dim_u)
        vb = np.zeros(block.dim_v)
        for a, c in atom.v_a.items():
            if _alive(block.intervals_u[a], t):
                va[a] = float(c)
        for b, c in atom.v_b.items():
            if _alive(block.intervals_v[b], t):
                vb[b] = float(c)
        out += np.outer(va, vb)
    return out


def _lifespan_weight(
    block: SheafLaplacianBlock,
    atom: LaplacianAtom,
    out_interval: tuple[float, float],
    in_interval: tuple[float, float],
) -> float:
    """Overlap of atom and both lifespans divided by the output lifespan.

    Essential deaths are capped at the horizon t+. A class born exactly at
    the horizon has zero nominal span; it is alive only at the final
    instant, so its weight degenerates to 1 when atom and partner are
    still alive there and to 0 otherwise.
    """
    h = block.horizon
    cap = lambda x: min(x, h)
    lo = max(atom.start, out_interval[0], in_interval[0])
    hi = min(cap(atom.end), cap(out_interval[1]), cap(in_interval[1]))
    denom = cap(out_interval[1]) - out_interval[0]
    if denom <= 0:
        alive_at_end = atom.end == INF and in_interval[1] == INF
        return 1.0 if alive_at_end else 0.0
    return max(hi - lo, 0.0) / denom


@dataclass
class AssembledLaplacian:
    """Block operator over the direct sum of all order-k stalks.

    In slice mode this equals delta^T delta for the restriction maps alive
    at the slice time, hence symmetric PSD; lifespan-weighted mode rescales
    each entry by its overlap divided by the output cocycle's span.
    """

    order: int
    mode: tuple
    vertices: list[int]
    dims: dict[int, int]
    offsets: dict[int, int]
    blocks: dict[tuple[int, int], SheafLaplacianBlock]
    dense: np.ndarray
    dense_exact: list[list] | None = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return self.dense.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.dense @ x

    def kernel_dim_exact(self) -> int:
        """dim ker via exact rank; requires the exact carrier."""
        from fractions import Fraction

        from .linalg import dense_rank_exact

        if self.dense_exact is None:
            raise ContractError("exact kernel rank needs the exact carrier")
        n = self.dimension
        if n == 0:
            return 0
        rows = [[Fraction(v) for v in row] for row in self.dense_exact]
        return n - dense_rank_exact(rows)


def assemble_laplacian(
    filtration: Filtration,
    stalks: dict[int, LocalStalk],
    k: int,
    mode,
    fld: Field = Field(),
) -> AssembledLaplacian:
    """Assemble the global operator from pairwise blocks.

    mode is ("slice", t) or "weighted". The diagonal (u,u) block sums, over
    neighbors v, the outer squares of the u-side atom vectors, so the slice
    operator is exactly delta^T delta. Atoms whose per-entry interval is
    empty contribute nothing in either mode.
    """
    if isinstance(mode, str):
        mode = (mode,)
    if tuple(mode[:1]) == ("weighted",) and len(mode) == 1:
        mode_t = ("weighted",)
    elif len(mode) == 2 and mode[0] == "slice":
        mode_t = ("slice", float(mode[1]))
    else:
        raise ContractError("mode must be ('slice', t) or 'weighted'")

    vertices = list(range(filtration.vertex_count))
    for v in vertices:
        if v not in stalks:
            raise ContractError(f"missing stalk for vertex {v}")
    dims = {v: len(stalks[v].order_cocycles(k)) for v in vertices}
    offsets = {}
    total = 0
    for v in vertices:
        offsets[v] = total
        total += dims[v]

    exact = fld.kind == "exact"
    from fractions import Fraction

    zero = Fraction(0) if exact else 0.0
    dense_obj = [[zero] * total for _ in range(total)]

    edge_pairs = [
        filtration.simplices[i] for i in filtration.ids_of_dim(1)
    ]
    blocks: dict[tuple[int, int], SheafLaplacianBlock] = {}
    for (u, v) in edge_pairs:
        if dims[u] == 0 or dims[v] == 0:
            continue
        block = sheaf_laplacian_block(stalks[u], stalks[v], filtration, k, fld)
        blocks[(u, v)] = block
        ou, ov = offsets[u], offsets[v]
        for atom in block.atoms:
            for a, ca in atom.v_a.items():
                for b, cb in atom.v_b.items():
                    if mode_t[0] == "slice":
                        t = mode_t[1]
                        lo, hi = block.entry_interval(atom, a, b)
                        if not (lo <= t < hi):
                            continue
                        val = ca * cb
                        dense_obj[ou + a][ov + b] += val
                        dense_obj[ov + b][ou + a] += val
                    else:
                        w_uv = _lifespan_weight(
                            block, atom, block.intervals_u[a], block.intervals_v[b]
                        )
                        w_vu = _lifespan_weight(
                            block, atom, block.intervals_v[b], block.intervals_u[a]
                        )
                        val = ca * cb
                        if w_uv:
                            dense_obj[ou + a][ov + b] += val * _coerce_w(w_uv, exact)
                        if w_vu:
                            dense_obj[ov + b][ou + a] += val * _coerce_w(w_vu, exact)
            # diagonal contributions delta^T delta style
            for (vec, intervals, off) in (
                (atom.v_a, block.intervals_u, ou),
                (atom.v_b, block.intervals_v, ov),
            ):
                for a, ca in vec.items():
                    for b, cb in vec.items():
                        if mode_t[0] == "slice":
                            t = mode_t[1]
                            lo = max(atom.start, intervals[a][0], intervals[b][0])
                            hi = min(atom.end, intervals[a][1], intervals[b][1])
                            if not (lo <= t < hi):
                                continue
                            dense_obj[off + a][off + b] += ca * cb
                        else:
                            w = _lifespan_weight(block, atom, intervals[a], intervals[b])
                            if w:
                                dense_obj[off + a][off + b] += ca * cb * _coerce_w(w, exact)

    dense = np.array(
        [[float(v) for v in row] for row in dense_obj], dtype=float
    ).reshape(total, total)
    return AssembledLaplacian(
        order=k,
        mode=mode_t,
        vertices=vertices,
        dims=dims,
        offsets=offsets,
        blocks=blocks,
        dense=dense,
        dense_exact=dense_obj if exact else None,
    )


def _coerce_w(w: float, exact: bool):
    from fractions import Fraction

    return Fraction(w) if exact else w
