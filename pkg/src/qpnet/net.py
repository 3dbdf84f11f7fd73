"""Projected one-layer networks on the Hilbert cube.

A neuron at truncation ``N`` is a triple ``(h, B, y)`` with ``h, y`` in R^N and
``B`` an N x N matrix; it maps a cube point ``z`` to
``h . sigma(B z + y)``.  A scalar network sums ``J`` neurons; a vector network
combines ``M`` scalar networks with coefficient vectors ``v^(m)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .activation import ActivationSpec, RankOne, activation_from_json, apply, seq_dot, truncate
from .embed import EncoderSpec, encoder_from_json

MODEL_VERSION = 1
THETA_LAYOUT = "per-neuron h|B-rowmajor|y"


@dataclass(eq=False)
class NeuronParams:
    h: np.ndarray
    B: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=np.float64)
        self.B = np.asarray(self.B, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        n = len(self.h)
        if self.h.shape != (n,) or self.y.shape != (n,) or self.B.shape != (n, n):
            raise ValueError(f"inconsistent neuron shapes h{self.h.shape} B{self.B.shape} y{self.y.shape}")

    @property
    def n(self) -> int:
        return len(self.h)

    def copy(self) -> "NeuronParams":
        return NeuronParams(self.h.copy(), self.B.copy(), self.y.copy())

    def to_json(self) -> dict:
        return {"h": self.h.tolist(), "B": self.B.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_json(cls, obj) -> "NeuronParams":
        return cls(np.array(obj["h"], dtype=np.float64), np.array(obj["B"], dtype=np.float64).reshape(len(obj["h"]), -1), np.array(obj["y"], dtype=np.float64))


@dataclass(eq=False)
class ScalarNet:
    truncation: int
    neurons: list
    activation: ActivationSpec
    encoder: EncoderSpec | None = None

    def __post_init__(self):
        if not self.neurons:
            raise ValueError("a network needs at least one neuron")
        for nr in self.neurons:
            if nr.n != self.truncation:
                raise ValueError(f"neuron of size {nr.n} in a truncation-{self.truncation} net")
        if isinstance(self.activation, RankOne) and self.activation.dim != self.truncation:
            raise ValueError("activation dimension must equal the truncation")

    @property
    def J(self) -> int:
        return len(self.neurons)

    def stacked(self):
        """Parameters as arrays of shape (J, N), (J, N, N), (J, N)."""
        return (
            np.stack([nr.h for nr in self.neurons]),
            np.stack([nr.B for nr in self.neurons]),
            np.stack([nr.y for nr in self.neurons]),
        )

    def copy(self) -> "ScalarNet":
        return replace(self, neurons=[nr.copy() for nr in self.neurons])

    def __call__(self, z):
        return forward_scalar(self, z)


@dataclass(eq=False)
class VectorNet:
    components: list
    out_vectors: np.ndarray

    def __post_init__(self):
        self.out_vectors = np.atleast_2d(np.asarray(self.out_vectors, dtype=np.float64))
        if not self.components:
            raise ValueError("a vector network needs at least one component")
        if self.out_vectors.shape[0] != len(self.components):
            raise ValueError("need one out vector per component")
        n = self.components[0].truncation
        if any(c.truncation != n for c in self.components):
            raise ValueError("components must share the truncation")

    @property
    def truncation(self) -> int:
        return self.components[0].truncation

    @property
    def activation(self):
        return self.components[0].activation

    @property
    def encoder(self):
        return self.components[0].encoder

    @property
    def K(self) -> int:
        return self.out_vectors.shape[1]

    def copy(self) -> "VectorNet":
        return VectorNet([c.copy() for c in self.components], self.out_vectors.copy())

    def __call__(self, z):
        return forward_vector(self, z)


def _check_input(net, z):
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != net.truncation:
        raise ValueError(f"net has truncation {net.truncation}, input has length {z.shape[-1]}")
    return z


def neuron_outputs(net: ScalarNet, z) -> np.ndarray:
    """Per-neuron contributions ``h_j . sigma(B_j z + y_j)``, shape (..., J)."""
    z = _check_input(net, z)
    hs, Bs, ys = net.stacked()
    pre = seq_dot(Bs, z[..., None, None, :]) + ys
    return seq_dot(apply(net.activation, pre), hs)


def forward_scalar(net: ScalarNet, z):
    """Network output at cube point(s) ``z``; neurons are summed in index order."""
    contrib = neuron_outputs(net, z)
    total = np.cumsum(contrib, axis=-1)[..., -1]
    return float(total) if total.ndim == 0 else total


def forward_vector(vnet: VectorNet, z) -> np.ndarray:
    z = _check_input(vnet, z)
    scal = np.stack([np.asarray(forward_scalar(c, z)) for c in vnet.components], axis=-1)
    return _combine(scal, vnet.out_vectors)


def _combine(scal, vecs):
    # sum_m scal_m * v^(m), accumulated in component order
    terms = scal[..., :, None] * vecs
    return np.cumsum(terms, axis=-2)[..., -1, :]


def project_params(net: ScalarNet, n_prime: int) -> ScalarNet:
    """Leading ``n_prime`` block of every parameter and of the activation vectors."""
    if not 1 <= n_prime <= net.truncation:
        raise ValueError(f"projection level must lie in 1..{net.truncation}, got {n_prime}")
    neurons = [NeuronParams(nr.h[:n_prime].copy(), nr.B[:n_prime, :n_prime].copy(), nr.y[:n_prime].copy()) for nr in net.neurons]
    return ScalarNet(n_prime, neurons, truncate(net.activation, n_prime), net.encoder)


def project_vector(vnet: VectorNet, n_prime: int, k_prime: int | None = None) -> VectorNet:
    vecs = vnet.out_vectors if k_prime is None else np.stack([truncate_target(v, k_prime) for v in vnet.out_vectors])
    return VectorNet([project_params(c, n_prime) for c in vnet.components], vecs)


def truncate_target(v, k_prime: int) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if not 1 <= k_prime <= len(v):
        raise ValueError(f"target truncation must lie in 1..{len(v)}, got {k_prime}")
    return v[:k_prime].copy()


def init_scalar(n: int, j: int, activation: ActivationSpec, rng: np.random.Generator, encoder=None) -> ScalarNet:
    """Random init away from the all-zero stationary point."""
    bound = 1.0 / np.sqrt(j * n)
    neurons = [
        NeuronParams(
            rng.uniform(-bound, bound, n),
            rng.normal(0.0, np.sqrt(1.0 / n), (n, n)),
            rng.uniform(-0.5, 0.5, n),
        )
        for _ in range(j)
    ]
    return ScalarNet(n, neurons, activation, encoder)


def init_vector(n: int, j: int, m: int, k: int, activation, rng, encoder=None, out_vectors=None) -> VectorNet:
    comps = [init_scalar(n, j, activation, rng, encoder) for _ in range(m)]
    if out_vectors is None:
        out_vectors = rng.normal(0.0, 1.0 / np.sqrt(m), (m, k))
    return VectorNet(comps, out_vectors)


# ---------------------------------------------------------------------------
# model JSON


def model_to_json(model) -> dict:
    base = model.components[0] if isinstance(model, VectorNet) else model
    obj = {
        "version": MODEL_VERSION,
        "truncation": base.truncation,
        "encoder": base.encoder.to_json() if base.encoder is not None else None,
        "activation": base.activation.to_json(),
        "theta_layout": THETA_LAYOUT,
    }
    if isinstance(model, VectorNet):
        obj["neurons"] = [[nr.to_json() for nr in c.neurons] for c in model.components]
        obj["out_vectors"] = model.out_vectors.tolist()
    else:
        obj["neurons"] = [nr.to_json() for nr in model.neurons]
    return obj


def model_from_json(obj: dict):
    if obj.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {obj.get('version')!r}")
    n = obj["truncation"]
    act = activation_from_json(obj["activation"])
    enc = encoder_from_json(obj["encoder"]) if obj.get("encoder") else None
    if "out_vectors" in obj:
        comps = [ScalarNet(n, [NeuronParams.from_json(nr) for nr in c], act, enc) for c in obj["neurons"]]
        return VectorNet(comps, np.array(obj["out_vectors"], dtype=np.float64))
    return ScalarNet(n, [NeuronParams.from_json(nr) for nr in obj["neurons"]], act, enc)


def dumps_model(model) -> str:
    return json.dumps(model_to_json(model), sort_keys=True)


def save_model(model, path):
    with open(path, "w") as fh:
        fh.write(dumps_model(model))
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        return model_from_json(json.load(fh))
