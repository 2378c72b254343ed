"""Sheaf diffusion, the sign-equivariant layer and filtration gradients.

Everything here is a forward pass (plus exact/numeric derivatives);
training loops and optimizers live outside the package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .complexes import Filtration
from .errors import ContractError
from .persistence import PersistentCocycle
from .sheaf import AssembledLaplacian, LocalStalk


@dataclass
class FeatureBundle:
    """Per-vertex feature vectors indexed by order-k stalk cocycles.

    values[v] has shape (stalk_dim(v), channels); channels are independent
    copies of the stalk vector space.
    """

    order: int
    channels: int
    values: dict[int, np.ndarray]

    def __post_init__(self):
        for v, arr in self.values.items():
            arr = np.asarray(arr, dtype=float)
            if arr.ndim == 1:
                arr = arr[:, None]
            if arr.shape[1] != self.channels:
                raise ContractError(f"vertex {v}: expected {self.channels} channels")
            if not np.all(np.isfinite(arr)):
                raise ContractError(f"vertex {v}: non-finite feature entries")
            self.values[v] = arr

    def stacked(self, laplacian: AssembledLaplacian) -> np.ndarray:
        """Concatenate vertex vectors in the Laplacian's layout."""
        x = np.zeros((laplacian.dimension, self.channels))
        for v, arr in self.values.items():
            dim = laplacian.dims.get(v, 0)
            if arr.shape[0] != dim:
                raise ContractError(
                    f"vertex {v}: feature dim {arr.shape[0]} != stalk dim {dim}"
                )
            off = laplacian.offsets[v]
            x[off : off + dim] = arr
        return x

    @classmethod
    def from_stacked(cls, laplacian: AssembledLaplacian, x: np.ndarray, order: int):
        channels = x.shape[1] if x.ndim == 2 else 1
        x = x.reshape(laplacian.dimension, channels)
        values = {}
        for v in laplacian.vertices:
            off, dim = laplacian.offsets[v], laplacian.dims[v]
            values[v] = x[off : off + dim].copy()
        return cls(order=order, channels=channels, values=values)

    @classmethod
    def random(cls, laplacian: AssembledLaplacian, order, channels=1, seed=0):
        rng = np.random.default_rng(seed)
        values = {
            v: rng.standard_normal((laplacian.dims[v], channels))
            for v in laplacian.vertices
        }
        return cls(order=order, channels=channels, values=values)


def dirichlet_energy(features: FeatureBundle, laplacian: AssembledLaplacian) -> float:
    """x^T Delta x summed over channels; nonnegative for slice Laplacians."""
    x = features.stacked(laplacian)
    return float(np.sum(x * (laplacian.dense @ x)))


def power_iteration(matrix: np.ndarray, iters: int = 200) -> float:
    """Largest-magnitude eigenvalue estimate, deterministic start vector."""
    n = matrix.shape[0]
    if n == 0:
        return 0.0
    v = np.ones(n) + 1e-3 * np.arange(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = matrix @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        lam = float(v @ (matrix @ v))
    return lam


def diffuse(
    features: FeatureBundle,
    laplacian: AssembledLaplacian,
    alpha: float,
    steps: int,
) -> tuple[FeatureBundle, list[float]]:
    """Explicit Euler diffusion x <- x - alpha * Delta x.

    Requires 0 < alpha < 2 / lambda_max (power-iteration estimate), which
    makes the Dirichlet energy non-increasing; the iterates converge to
    the projection of x onto ker Delta. Returns (features, energy trace
    with one entry per step including the initial energy).
    """
    lam = power_iteration(laplacian.dense)
    limit = 2.0 / lam if lam > 0 else math.inf
    if not (0.0 < alpha < limit):
        raise ContractError(f"alpha={alpha} outside (0, 2/lambda_max={limit:.6g})")
    x = features.stacked(laplacian)
    energies = [float(np.sum(x * (laplacian.dense @ x)))]
    for _ in range(steps):
        x = x - alpha * (laplacian.dense @ x)
        energies.append(float(np.sum(x * (laplacian.dense @ x))))
    return FeatureBundle.from_stacked(laplacian, x, features.order), energies


@dataclass
class MLPParams:
    """Dense MLP with tanh between layers and a linear last layer."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @classmethod
    def init(cls, widths: list[int], seed: int = 0) -> "MLPParams":
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(weights=weights, biases=biases)

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[0]


def mlp_forward(params: MLPParams, x: np.ndarray) -> np.ndarray:
    h = np.asarray(x, dtype=float)
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = w @ h + b
        if i < last:
            h = np.tanh(h)
    return h


def mlp_jvp(params: MLPParams, x: np.ndarray, dx: np.ndarray) -> np.ndarray:
    """Forward-mode directional derivative of mlp_forward at x along dx."""
    h = np.asarray(x, dtype=float)
    dh = np.asarray(dx, dtype=float)
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = w @ h + b
        dh = w @ dh
        if i < last:
            t = np.tanh(h)
            dh = (1.0 - t * t) * dh
            h = t
    return dh


def sign_equivariant_layer(x: np.ndarray, rho: MLPParams) -> np.ndarray:
    """psi(x) = x * rho(|x|); satisfies psi(Dx) = D psi(x) for diagonal +-1 D."""
    x = np.asarray(x, dtype=float)
    if rho.in_dim != x.shape[0] or rho.out_dim != x.shape[0]:
        raise ContractError(
            f"rho maps {rho.in_dim}->{rho.out_dim}, need {x.shape[0]}->{x.shape[0]}"
        )
    return x * mlp_forward(rho, np.abs(x))


def sign_equivariant_jvp(x: np.ndarray, dx: np.ndarray, rho: MLPParams) -> np.ndarray:
    """Directional derivative of the sign-equivariant layer at x along dx."""
    x = np.asarray(x, dtype=float)
    dx = np.asarray(dx, dtype=float)
    gate = mlp_forward(rho, np.abs(x))
    dgate = mlp_jvp(rho, np.abs(x), np.sign(x) * dx)
    return dx * gate + x * dgate


def hypernet_weights(stalk: LocalStalk, psi) -> np.ndarray:
    """Per-node weight matrix W[i,j] = Psi(k_i, s_i, t_i, k_j, s_j, t_j).

    Psi is an MLPParams (6 inputs, 1 output) or any callable of the six
    descriptor components. W depends only on the stalk's cocycle
    descriptors, so nodes with identical descriptor lists share weights;
    an empty stalk yields a 0x0 matrix.
    """
    if isinstance(psi, MLPParams):
        if psi.in_dim != 6 or psi.out_dim != 1:
            raise ContractError("Psi must map 6 descriptor inputs to 1 output")
        evaluate = lambda a, b: mlp_forward(psi, np.array(a + b, dtype=float)).item()
    else:
        evaluate = lambda a, b: float(psi(*a, *b))
    desc = stalk.descriptors()
    n = len(desc)
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            w[i, j] = evaluate(desc[i], desc[j])
    return w


def node_gain_network(stalk: LocalStalk, psi: MLPParams) -> MLPParams:
    """The stalk's rho as the single linear layer produced by the hypernetwork."""
    w = hypernet_weights(stalk, psi)
    return MLPParams(weights=[w], biases=[np.zeros(w.shape[0])])


@dataclass(frozen=True)
class FiltrationGradient:
    """Sparse d(birth)/d(weights) and d(death)/d(weights) of one cocycle.

    death is None for essential classes (querying it is the explicit
    "essential" signal). Keys are undirected edges (u, v) with u < v.
    """

    birth: dict[tuple[int, int], float]
    death: dict[tuple[int, int], float] | None

    @property
    def essential(self) -> bool:
        return self.death is None


def _critical_edge(filtration: Filtration, sid: int) -> tuple[int, int] | None:
    """Max-weight edge of a simplex; lexicographic tie-break; None for vertices."""
    simplex = filtration.simplices[sid]
    if len(simplex) < 2:
        return None
    best = None
    best_w = -math.inf
    for i in range(len(simplex)):
        for j in range(i + 1, len(simplex)):
            e = (simplex[i], simplex[j])
            w = filtration.values[filtration.id_of(e)]
            if w > best_w or (w == best_w and e < best):
                best, best_w = e, w
    return best


def filtration_gradient(
    filtration: Filtration, cocycle: PersistentCocycle
) -> FiltrationGradient:
    """Route d(birth)/dw and d(death)/dw to the critical edges.

    A simplex's filtration value is the max of its edge weights, so the
    subgradient is the indicator of the argmax edge (under the
    deterministic tie-break); vertex values are constant 0.
    """
    birth_edge = _critical_edge(filtration, cocycle.birth_index)
    birth = {} if birth_edge is None else {birth_edge: 1.0}
    if cocycle.essential:
        return FiltrationGradient(birth=birth, death=None)
    death_edge = _critical_edge(filtration, cocycle.death_index)
    death = {} if death_edge is None else {death_edge: 1.0}
    return FiltrationGradient(birth=birth, death=death)


def message_pass(
    features: FeatureBundle, laplacian: AssembledLaplacian
) -> FeatureBundle:
    """Apply the assembled (typically lifespan-weighted) Laplacian channelwise.

    This is the embed / apply / project message passing: features embed
    into the persistent module, the sheaf Laplacian acts per time step,
    and lifespan averaging projects back; the weighted assembly implements
    the composition in closed form.
    """
    x = features.stacked(laplacian)
    return FeatureBundle.from_stacked(laplacian, laplacian.dense @ x, features.order)


def save_mlp(params: MLPParams, path) -> None:
    """JSON shape header + flat little-endian float64 parameter array."""
    widths = [params.in_dim] + [w.shape[0] for w in params.weights]
    header = json.dumps({"widths": widths, "activation": "tanh"}).encode()
    flat = np.concatenate(
        [w.ravel() for w in params.weights] + [b.ravel() for b in params.biases]
    ).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(header + b"\n")
        fh.write(flat.tobytes())


def load_mlp(path) -> MLPParams:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        flat = np.frombuffer(fh.read(), dtype="<f8")
    widths = header["widths"]
    weights, biases = [], []
    pos = 0
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        weights.append(flat[pos : pos + fan_in * fan_out].reshape(fan_out, fan_in).copy())
        pos += fan_in * fan_out
    for fan_out in widths[1:]:
        biases.append(flat[pos : pos + fan_out].copy())
        pos += fan_out
    return MLPParams(weights=weights, biases=biases)
