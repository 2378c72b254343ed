"""Dense brute-force homology oracle.

Everything here recomputes boundary matrices from simplex tuples and
eliminates them with its own exact integer/rational routines; none of the
sparse reduction machinery of the fast path is used. Tests and the CLI
`verify` command treat these answers as ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .complexes import Filtration, SimplexSubset, is_open_set
from .errors import ContractError

# ---------------------------------------------------------------------------
# exact linear algebra on sparse integer/rational rows
# ---------------------------------------------------------------------------


def _gcd_normalize(row: dict[int, int]) -> dict[int, int]:
    g = 0
    for v in row.values():
        g = math.gcd(g, v)
    if g > 1:
        return {c: v // g for c, v in row.items()}
    return row


def rank_int_rows(rows) -> int:
    """Rank of a matrix given as sparse integer rows (dicts col->coeff)."""
    pivots: dict[int, dict[int, int]] = {}
    rank = 0
    for row in rows:
        r = {c: v for c, v in row.items() if v}
        while r:
            c = min(r)
            pr = pivots.get(c)
            if pr is None:
                pivots[c] = _gcd_normalize(r)
                rank += 1
                break
            a, p = r[c], pr[c]
            new = {}
            for k in r.keys() | pr.keys():
                val = p * r.get(k, 0) - a * pr.get(k, 0)
                if val:
                    new[k] = val
            r = _gcd_normalize(new)
    return rank


def kernel_basis(rows, ncols: int) -> list[dict[int, int]]:
    """Integer basis of {x : row . x = 0 for all rows}, via rational RREF."""
    ech: list[tuple[int, dict[int, Fraction]]] = []
    for row in rows:
        r = {c: Fraction(v) for c, v in row.items() if v}
        for pc, prow in ech:
            f = r.get(pc)
            if f:
                for c2, v2 in prow.items():
                    nv = r.get(c2, Fraction(0)) - f * v2
                    if nv:
                        r[c2] = nv
                    elif c2 in r:
                        del r[c2]
        if r:
            pc = min(r)
            pv = r[pc]
            ech.append((pc, {c: v / pv for c, v in r.items()}))
    ech.sort(key=lambda e: e[0])
    for i in range(len(ech) - 1, -1, -1):
        pc, prow = ech[i]
        for j in range(i):
            f = ech[j][1].get(pc)
            if f:
                target = ech[j][1]
                for c2, v2 in prow.items():
                    nv = target.get(c2, Fraction(0)) - f * v2
                    if nv:
                        target[c2] = nv
                    elif c2 in target:
                        del target[c2]
    pivot_cols = {pc for pc, _ in ech}
    basis = []
    for free in range(ncols):
        if free in pivot_cols:
            continue
        vec = {free: Fraction(1)}
        for pc, prow in ech:
            coeff = prow.get(free)
            if coeff:
                vec[pc] = -coeff
        den = 1
        for v in vec.values():
            den = den * v.denominator // math.gcd(den, v.denominator)
        basis.append({c: int(v * den) for c, v in vec.items()})
    return basis


def in_span(span_rows, candidates) -> bool:
    """True iff every candidate row lies in the span of span_rows."""
    base = rank_int_rows(span_rows)
    return rank_int_rows(list(span_rows) + list(candidates)) == base


# ---------------------------------------------------------------------------
# boundary matrices of subcomplexes, rebuilt from simplex tuples
# ---------------------------------------------------------------------------


def ids_at(filtration: Filtration, t: float) -> set[int]:
    return {i for i, v in enumerate(filtration.values) if v <= t}


def _check_closed(filtration: Filtration, ids: set[int]) -> None:
    for i in ids:
        s = filtration.simplices[i]
        for j in range(len(s)):
            face = s[:j] + s[j + 1 :]
            if face and filtration.id_of(face) not in ids:
                raise ContractError("subset is not closed (missing a face)")


def _boundary_rows(
    filtration: Filtration, member: set[int], k: int, excluded: set[int]
) -> tuple[list[dict[int, int]], int]:
    """Rows of the k-th quotient boundary map, one row per (k-1)-simplex.

    member is a closed simplex id set (the ambient complex); excluded is a
    closed-within-member subset whose chains are collapsed. Returns
    (rows over k-simplex column positions, number of columns).
    """
    cols = [i for i in filtration.ids_of_dim(k) if i in member and i not in excluded]
    rows_ids = [
        i for i in filtration.ids_of_dim(k - 1) if i in member and i not in excluded
    ]
    cpos = {sid: c for c, sid in enumerate(cols)}
    rpos = {sid: r for r, sid in enumerate(rows_ids)}
    rows: list[dict[int, int]] = [dict() for _ in rows_ids]
    for sid in cols:
        s = filtration.simplices[sid]
        if len(s) < 2:
            continue
        for j in range(len(s)):
            face = s[:j] + s[j + 1 :]
            r = rpos.get(filtration.id_of(face))
            if r is not None:
                rows[r][cpos[sid]] = -1 if j % 2 else 1
    return rows, len(cols)


def _relative_betti(
    filtration: Filtration, member: set[int], excluded: set[int], k: int
) -> int:
    """dim H_k of the quotient chain complex C(member)/C(excluded)."""
    rows_k, ncols_k = _boundary_rows(filtration, member, k, excluded)
    rows_k1, _ = _boundary_rows(filtration, member, k + 1, excluded)
    rank_k = rank_int_rows(rows_k)
    rank_k1 = rank_int_rows(rows_k1)
    return ncols_k - rank_k - rank_k1


def betti_dense(filtration: Filtration, t: float, k: int) -> int:
    """dim H_k(S_t) by exact dense elimination of the boundary maps."""
    return _relative_betti(filtration, ids_at(filtration, t), set(), k)


def relative_betti_dense(
    filtration: Filtration, t: float, closed_subset: SimplexSubset, k: int
) -> int:
    """dim H_k(S_t, A_t) for a closed subset A."""
    present = ids_at(filtration, t)
    excluded = set(closed_subset.ids) & present
    _check_closed(filtration, excluded)
    return _relative_betti(filtration, present, excluded, k)


def hodge_laplacian_dense(filtration: Filtration, t: float, k: int) -> list[list[int]]:
    """Dense integer Hodge Laplacian d_k^T d_k + d_{k+1} d_{k+1}^T of S_t."""
    present = ids_at(filtration, t)
    rows_k, n = _boundary_rows(filtration, present, k, set())
    rows_k1, n1 = _boundary_rows(filtration, present, k + 1, set())
    lap = [[0] * n for _ in range(n)]
    for row in rows_k:  # d_k^T d_k: row of d_k contributes outer square
        items = list(row.items())
        for a, va in items:
            for b, vb in items:
                lap[a][b] += va * vb
    # d_{k+1} d_{k+1}^T: columns of d_{k+1} are rows of its transpose
    cols: list[dict[int, int]] = [dict() for _ in range(n1)]
    for r, row in enumerate(rows_k1):
        for c, v in row.items():
            cols[c][r] = v
    for col in cols:
        items = list(col.items())
        for a, va in items:
            for b, vb in items:
                lap[a][b] += va * vb
    return lap


def hodge_kernel_dim(filtration: Filtration, t: float, k: int) -> int:
    lap = hodge_laplacian_dense(filtration, t, k)
    rows = [
        {c: v for c, v in enumerate(row) if v} for row in lap
    ]
    return len(lap) - rank_int_rows(rows)


# ---------------------------------------------------------------------------
# relative cohomology subspaces over designated open sets
# ---------------------------------------------------------------------------


def _open_cohomology_spaces(
    filtration: Filtration, present: set[int], open_ids: set[int], k: int
):
    """(cocycle kernel basis, coboundary rows, columns) of H^k(S, S \\ U).

    Vectors live over the k-simplices of U inside `present`; cocycle rows
    are the coboundary constraints from U's (k+1)-simplices and the
    coboundary space is spanned by delta of U's (k-1)-simplices.
    """
    u = open_ids & present
    cols = [i for i in filtration.ids_of_dim(k) if i in u]
    cpos = {sid: c for c, sid in enumerate(cols)}
    constraints: list[dict[int, int]] = []
    for sid in (i for i in filtration.ids_of_dim(k + 1) if i in u):
        s = filtration.simplices[sid]
        row = {}
        for j in range(len(s)):
            face = s[:j] + s[j + 1 :]
            c = cpos.get(filtration.id_of(face))
            if c is not None:
                row[c] = -1 if j % 2 else 1
        constraints.append(row)
    cob: list[dict[int, int]] = []
    for sid in (i for i in filtration.ids_of_dim(k - 1) if i in u):
        s = filtration.simplices[sid]
        vec: dict[int, int] = {}
        for cof in (i for i in filtration.ids_of_dim(k) if i in u):
            tau = filtration.simplices[cof]
            if set(s) <= set(tau):
                missing = next(x for x in tau if x not in s)
                sign = (-1) ** tau.index(missing)
                vec[cpos[cof]] = sign
        if vec:
            cob.append(vec)
    kernel = kernel_basis(constraints, len(cols))
    return kernel, cob, cols


def _embed(vec: dict[int, int], src_cols: list[int], dst_pos: dict[int, int], offset=0):
    return {dst_pos[src_cols[c]] + offset: v for c, v in vec.items()}


@dataclass
class ExactnessReport:
    order: int
    positions: list[dict]

    @property
    def exact(self) -> bool:
        return all(p["im_rank"] == p["ker_dim"] for p in self.positions)


def check_mayer_vietoris(
    filtration: Filtration,
    open_a: SimplexSubset,
    open_b: SimplexSubset,
    k: int,
    t: float | None = None,
) -> ExactnessReport:
    """Exactness at H^k(A)+H^k(B) in the open-set Mayer-Vietoris sequence.

    Verifies im(H^k(A cap B) -> H^k(A) + H^k(B)) has the same rank as the
    kernel of the map onto H^k(A cup B), all computed densely from
    extension-by-zero cochain maps.
    """
    for subset in (open_a, open_b):
        if not is_open_set(filtration, subset.ids):
            raise ContractError("Mayer-Vietoris inputs must be open")
    present = ids_at(filtration, filtration.t_plus if t is None else t)
    a_ids, b_ids = set(open_a.ids), set(open_b.ids)
    c_ids = a_ids & b_ids
    d_ids = a_ids | b_ids

    n_c, b_c, cols_c = _open_cohomology_spaces(filtration, present, c_ids, k)
    n_a, b_a, cols_a = _open_cohomology_spaces(filtration, present, a_ids, k)
    n_b, b_b, cols_b = _open_cohomology_spaces(filtration, present, b_ids, k)
    n_d, b_d, cols_d = _open_cohomology_spaces(filtration, present, d_ids, k)

    pos_a = {sid: i for i, sid in enumerate(cols_a)}
    pos_b = {sid: i for i, sid in enumerate(cols_b)}
    pos_d = {sid: i for i, sid in enumerate(cols_d)}
    dim_ab = len(cols_a) + len(cols_b)

    # H^k(A) + H^k(B) boundary space inside the product coordinates
    b_prod = [_embed(v, cols_a, pos_a) for v in b_a]
    b_prod += [_embed(v, cols_b, pos_b, offset=len(cols_a)) for v in b_b]

    dim_va = rank_int_rows(n_a + b_a) - rank_int_rows(b_a)
    dim_vb = rank_int_rows(n_b + b_b) - rank_int_rows(b_b)

    # image of map1: xi |-> (ext_A xi, -ext_B xi) modulo boundaries
    img1 = []
    for vec in n_c:
        row = _embed(vec, cols_c, pos_a)
        for c, v in _embed(vec, cols_c, pos_b, offset=len(cols_a)).items():
            row[c] = -v
        img1.append(row)
    im_rank = rank_int_rows(img1 + b_prod) - rank_int_rows(b_prod)

    # rank of map2: (alpha, beta) |-> ext_D alpha + ext_D beta modulo B_D
    img2 = [_embed(v, cols_a, pos_d) for v in n_a]
    img2 += [_embed(v, cols_b, pos_d) for v in n_b]
    rank2 = rank_int_rows(img2 + b_d) - rank_int_rows(b_d)
    ker_dim = dim_va + dim_vb - rank2

    report = ExactnessReport(
        order=k,
        positions=[{"position": "middle", "im_rank": im_rank, "ker_dim": ker_dim}],
    )
    return report


# ---------------------------------------------------------------------------
# step-by-step verification of the two persistence theorems
# ---------------------------------------------------------------------------


@dataclass
class TheoremReport:
    passed: bool
    steps_checked: int
    hypotheses_fired: int
    counterexample: dict | None = None


def _restrict_vec(vec: dict[int, int], keep_pos: dict[int, int]) -> dict[int, int]:
    return {keep_pos[c]: v for c, v in vec.items() if c in keep_pos}


def check_theorem_dies_earlier(
    filtration: Filtration,
    open_set: SimplexSubset,
    k: int,
    trials: int | None = None,
) -> TheoremReport:
    """When a (k+1)-simplex kills an absolute class that is the image of a
    relative class, the relative class dies at the same step.

    Walks the filtration one simplex at a time with dense recomputation of
    every space; `trials` caps the number of hypothesis-firing steps."""
    open_ids = set(open_set.ids)
    steps_checked = 0
    fired = 0
    for m in range(len(filtration)):
        sid = m  # filtration order is the id order
        if len(filtration.simplices[sid]) != k + 2:
            continue
        before = set(range(m))
        after = set(range(m + 1))
        steps_checked += 1

        def spaces(present):
            n_rel, _, cols_u = _open_cohomology_spaces(
                filtration, present, open_ids, k
            )
            # absolute cocycles and coboundaries over all k-simplices
            n_abs, b_abs, cols_all = _open_cohomology_spaces(
                filtration, present, set(range(len(filtration))), k
            )
            pos_all = {c: i for i, c in enumerate(cols_all)}
            n_rel_glob = [_embed(v, cols_u, pos_all) for v in n_rel]
            return n_rel_glob, n_abs, b_abs, cols_all

        rel_t, abs_t, b_t, cols_t = spaces(before)
        rel_t1, abs_t1, b_t1, cols_t1 = spaces(after)
        # a (k+1)-simplex changes no k-simplices: coordinates agree
        d_abs_t = rank_int_rows(abs_t + b_t) - rank_int_rows(b_t)
        d_abs_t1 = rank_int_rows(abs_t1 + b_t1) - rank_int_rows(b_t1)
        if d_abs_t1 >= d_abs_t:
            continue
        d_im_t = rank_int_rows(rel_t + b_t) - rank_int_rows(b_t)
        d_im_t1 = rank_int_rows(rel_t1 + b_t1) - rank_int_rows(b_t1)
        if d_im_t1 >= d_im_t:
            continue
        fired += 1
        # the killed class came from a relative class: that class must die
        d_rel_t = rank_int_rows(rel_t)
        d_rel_t1 = rank_int_rows(rel_t1)
        rel_dies = d_rel_t1 < d_rel_t
        # surviving relative classes must map to surviving absolute classes
        maps_into = in_span(abs_t1 + b_t1, rel_t1)
        if not (rel_dies and maps_into):
            return TheoremReport(
                passed=False,
                steps_checked=steps_checked,
                hypotheses_fired=fired,
                counterexample={"step": m, "simplex": filtration.simplices[m]},
            )
        if trials is not None and fired >= trials:
            break
    return TheoremReport(True, steps_checked, fired)


def check_theorem_appears_earlier(
    filtration: Filtration,
    open_set: SimplexSubset,
    k: int,
    trials: int | None = None,
) -> TheoremReport:
    """A persisting class in the image of a relative class at the later
    step comes from a relative class at the earlier step as well.

    Checked as: restricting the later step's relative cocycles to the
    earlier complex lands in span(relative cocycles + coboundaries)."""
    open_ids = set(open_set.ids)
    steps_checked = 0
    fired = 0
    for m in range(len(filtration)):
        dim = len(filtration.simplices[m]) - 1
        if dim not in (k, k + 1):
            continue
        before = set(range(m))
        after = set(range(m + 1))
        steps_checked += 1

        def rel_and_boundaries(present):
            n_rel, _, cols_u = _open_cohomology_spaces(
                filtration, present, open_ids, k
            )
            n_abs, b_abs, cols_all = _open_cohomology_spaces(
                filtration, present, set(range(len(filtration))), k
            )
            pos_all = {c: i for i, c in enumerate(cols_all)}
            return (
                [_embed(v, cols_u, pos_all) for v in n_rel],
                b_abs,
                cols_all,
                pos_all,
            )

        rel_t, b_t, cols_t, pos_t = rel_and_boundaries(before)
        rel_t1, _, cols_t1, _ = rel_and_boundaries(after)
        if not rel_t1:
            continue
        fired += 1
        keep = {i1: pos_t[c] for i1, c in enumerate(cols_t1) if c in pos_t}
        restricted = [_restrict_vec(v, keep) for v in rel_t1]
        restricted = [v for v in restricted if v]
        if not in_span(rel_t + b_t, restricted):
            return TheoremReport(
                passed=False,
                steps_checked=steps_checked,
                hypotheses_fired=fired,
                counterexample={"step": m, "simplex": filtration.simplices[m]},
            )
        if trials is not None and fired >= trials:
            break
    return TheoremReport(True, steps_checked, fired)


# ---------------------------------------------------------------------------
# excision
# ---------------------------------------------------------------------------


def closed_star_ids(filtration: Filtration, vertex: int) -> set[int]:
    """cl st v: simplices whose union with v is still a simplex."""
    out = set()
    for i, s in enumerate(filtration.simplices):
        merged = tuple(sorted(set(s) | {vertex}))
        if merged in filtration.index:
            out.add(i)
    return out


def excision_check(filtration: Filtration, vertex: int, k: int) -> bool:
    """H_k(S_t, S_t \\ st v) == H_k(cl st v, frontier st v) at every threshold."""
    star_ids = {
        i for i, s in enumerate(filtration.simplices) if vertex in s
    }
    clstar = closed_star_ids(filtration, vertex)
    frontier_ids = clstar - star_ids
    for t in filtration.threshold_values():
        present = ids_at(filtration, t)
        left = _relative_betti(filtration, present, present - star_ids, k)
        right = _relative_betti(
            filtration, clstar & present, frontier_ids & present, k
        )
        if left != right:
            return False
    return True
