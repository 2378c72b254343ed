"""File formats: deterministic JSON/CSV serialization and ingestion.

Floats are rendered with repr(), the shortest representation that
round-trips binary64 exactly (up to 17 significant digits); essential
deaths serialize as the string "inf".
"""

from __future__ import annotations

import json
import math
from fractions import Fraction

from .complexes import Filtration, WeightedGraph, graph_from_points
from .errors import ConfigError
from .persistence import Diagram, PersistentCocycle


def _render(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, Fraction):
        return _render(float(obj))
    if isinstance(obj, float):
        if math.isinf(obj):
            return '"inf"'
        return repr(obj)
    if isinstance(obj, dict):
        inner = ", ".join(f"{json.dumps(str(k))}: {_render(v)}" for k, v in obj.items())
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_render(v) for v in obj) + "]"
    raise TypeError(f"cannot render {type(obj)!r}")


def dumps(obj) -> str:
    return _render(obj) + "\n"


def _parse_float(text: str) -> float:
    return math.inf if text == "inf" else float(text)


# ---------------------------------------------------------------------------
# graph / point-cloud ingestion
# ---------------------------------------------------------------------------


def read_edge_csv(path) -> WeightedGraph:
    """CSV rows `u,v,w` with 0-based integer ids and decimal weights."""
    edges = []
    max_vertex = -1
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 3:
                raise ConfigError(f"{path}:{lineno}: expected 'u,v,w', got {line!r}")
            try:
                u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
            edges.append((u, v, w))
            max_vertex = max(max_vertex, u, v)
    return WeightedGraph(vertex_count=max_vertex + 1, edges=tuple(edges))


def read_points_csv(path, metric: str, knn: int | None) -> WeightedGraph:
    """CSV rows of d coordinates, expanded to a complete weighted graph."""
    points = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                points.append([float(p) for p in line.split(",")])
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    if not points:
        raise ConfigError(f"{path}: no points found")
    return graph_from_points(points, metric=metric, knn=knn)


# ---------------------------------------------------------------------------
# filtration dump / re-ingestion
# ---------------------------------------------------------------------------


def filtration_to_obj(filtration: Filtration) -> list[dict]:
    return [
        {"vertices": list(s), "value": filtration.values[i], "index": i}
        for i, s in enumerate(filtration.simplices)
    ]


def filtration_from_obj(obj, max_dim: int | None = None) -> Filtration:
    records = sorted(obj, key=lambda r: r["index"])
    simplices = [tuple(r["vertices"]) for r in records]
    values = [float(r["value"]) for r in records]
    vertex_count = max((s[-1] for s in simplices if s), default=-1) + 1
    dim = max((len(s) - 1 for s in simplices), default=0)
    return Filtration(
        simplices=simplices,
        values=values,
        vertex_count=vertex_count,
        max_dim=max(dim, max_dim) if max_dim is not None else dim,
    )


def read_filtration_json(path, max_dim: int | None = None) -> Filtration:
    """Re-ingest a filtration dump.

    The dump schema carries no construction depth, so callers may assert
    the clique-scan cap via max_dim (the deepest simplex present is used
    otherwise).
    """
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid filtration JSON ({exc})") from None
    filt = filtration_from_obj(obj, max_dim=max_dim)
    return filt


# ---------------------------------------------------------------------------
# diagrams
# ---------------------------------------------------------------------------


def cocycle_to_obj(c: PersistentCocycle) -> dict:
    return {
        "k": c.order,
        "birth": c.birth,
        "death": c.death,
        "birth_index": c.birth_index,
        "death_index": c.death_index,
        "representative": [
            {"simplex_index": i, "coeff": float(v)}
            for i, v in sorted(c.representative.items())
        ],
    }


def diagram_to_obj(diagram: Diagram) -> list[dict]:
    return [cocycle_to_obj(c) for c in diagram.classes]


def diagram_to_csv(diagram: Diagram) -> str:
    lines = ["k,birth,death"]
    for c in diagram.classes:
        death = "inf" if c.essential else repr(c.death)
        lines.append(f"{c.order},{repr(c.birth)},{death}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# stalks, Laplacian blocks, features
# ---------------------------------------------------------------------------


def stalk_to_obj(stalk) -> dict:
    return {
        "vertex": stalk.vertex,
        "horizon": stalk.horizon,
        "cocycles": [cocycle_to_obj(c) for c in stalk.cocycles],
    }


def laplacian_to_obj(assembled) -> dict:
    blocks = []
    for (u, v), block in sorted(assembled.blocks.items()):
        atoms = []
        for atom in block.atoms:
            atoms.append(
                {
                    "interval": [atom.start, atom.end],
                    "vA": [float(atom.v_a.get(i, 0.0)) for i in range(block.dim_u)],
                    "vB": [float(atom.v_b.get(i, 0.0)) for i in range(block.dim_v)],
                }
            )
        blocks.append({"u": u, "v": v, "atoms": atoms})
    return {
        "order": assembled.order,
        "stalk_dims": {str(v): assembled.dims[v] for v in assembled.vertices},
        "blocks": blocks,
    }


def features_to_obj(features) -> dict:
    channels = []
    for c in range(features.channels):
        channels.append(
            {
                str(v): {str(i): float(arr[i, c]) for i in range(arr.shape[0])}
                for v, arr in sorted(features.values.items())
            }
        )
    return {"order": features.order, "channels": channels}


def features_from_obj(obj, laplacian):
    import numpy as np

    from .nn import FeatureBundle

    channels = obj["channels"]
    n_channels = len(channels)
    values = {}
    for v in laplacian.vertices:
        dim = laplacian.dims[v]
        arr = np.zeros((dim, n_channels))
        for c, chan in enumerate(channels):
            for i_str, val in chan.get(str(v), {}).items():
                arr[int(i_str), c] = _parse_float(val) if isinstance(val, str) else val
        values[v] = arr
    return FeatureBundle(order=obj["order"], channels=n_channels, values=values)


def energy_trace_csv(energies) -> str:
    lines = ["step,energy"]
    for i, e in enumerate(energies):
        lines.append(f"{i},{repr(e)}")
    return "\n".join(lines) + "\n"


def dense_to_matrixmarket(matrix) -> str:
    """Dense symmetric slice export in MatrixMarket coordinate format."""
    n, m = matrix.shape
    entries = [
        (i + 1, j + 1, matrix[i, j])
        for i in range(n)
        for j in range(m)
        if matrix[i, j] != 0.0
    ]
    lines = ["%%MatrixMarket matrix coordinate real general", f"{n} {m} {len(entries)}"]
    lines += [f"{i} {j} {repr(float(v))}" for i, j, v in entries]
    return "\n".join(lines) + "\n"
