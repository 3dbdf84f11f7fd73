"""Metric projection onto a finite codebook and Borel networks built on it.

The projection picks the nearest center and breaks exact distance ties by the
smallest index.  It has finite range and is Borel measurable but not
continuous; the Voronoi-style preimage check below verifies the structure
that measurability rests on.  Indices are 0-based throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .activation import seq_dot
from .embed import EncoderSpec, encode
from .net import VectorNet, forward_vector


def sq_distances(centers, w) -> np.ndarray:
    """Squared distances from ``w`` to every center, each summed left to right."""
    d = np.asarray(centers, dtype=np.float64) - np.asarray(w, dtype=np.float64)
    return seq_dot(d, d)


@dataclass(eq=False)
class Codebook:
    centers: np.ndarray
    payloads: list
    covering_radius: float = 0.0
    epsilon: float | None = None
    payload_refs: list | None = None

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=np.float64))
        if len(self.centers) < 1:
            raise ValueError("empty codebook")
        if len(self.payloads) != len(self.centers):
            raise ValueError("need one payload per center")

    @property
    def R(self) -> int:
        return len(self.centers)

    def to_json(self) -> dict:
        refs = self.payload_refs
        if refs is None:
            refs = [p if isinstance(p, (str, int)) else getattr(p, "id", None) for p in self.payloads]
        return {
            "centers": self.centers.tolist(),
            "payload_refs": refs,
            "covering_radius": self.covering_radius,
            "epsilon": self.epsilon,
        }

    @classmethod
    def from_json(cls, obj: dict, payloads_by_id: dict | None = None) -> "Codebook":
        refs = obj["payload_refs"]
        payloads = [payloads_by_id[r] for r in refs] if payloads_by_id is not None else list(refs)
        return cls(np.array(obj["centers"], dtype=np.float64), payloads, obj["covering_radius"], obj.get("epsilon"), list(refs))


def metric_project(codebook: Codebook, w) -> int:
    """Index of the nearest center, smallest index on exact ties."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != codebook.centers.shape[1:]:
        raise ValueError(f"query has shape {w.shape}, centers have {codebook.centers.shape[1:]}")
    return int(np.argmin(sq_distances(codebook.centers, w)))


def metric_project_many(codebook: Codebook, ws) -> np.ndarray:
    ws = np.asarray(ws, dtype=np.float64)
    d = ws[:, None, :] - codebook.centers[None, :, :]
    return np.argmin(seq_dot(d, d), axis=1)


def build_codebook(points, epsilon: float, payloads=None) -> Codebook:
    """Greedy first-fit epsilon-net over ``points`` in input order.

    A point becomes a center iff it is farther than ``epsilon`` from every
    existing center, so the achieved covering radius never exceeds epsilon.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) == 0:
        raise ValueError("cannot build a codebook from no points")
    if payloads is None:
        payloads = list(range(len(pts)))
    chosen = [0]
    nearest = sq_distances(pts, pts[0])
    for i in range(1, len(pts)):
        # compare distances, not squares, so the radius bound holds in floating point
        if np.sqrt(nearest[i]) > epsilon:
            chosen.append(i)
            nearest = np.minimum(nearest, sq_distances(pts, pts[i]))
    radius = float(np.sqrt(np.max(nearest)))
    return Codebook(pts[chosen], [payloads[i] for i in chosen], radius, epsilon)


@dataclass(eq=False)
class BorelNet:
    vnet: VectorNet
    codebook: Codebook
    target_encoder: EncoderSpec | None = None

    def __post_init__(self):
        if self.vnet.K != self.codebook.centers.shape[1]:
            raise ValueError("network output length must match the center length")


def predict_borel(bnet: BorelNet, x, encoder: EncoderSpec | None = None):
    """``(payload, index, distance)`` for input ``x`` (a cube point if no encoder is known)."""
    enc = encoder or bnet.vnet.encoder
    z = np.asarray(x, dtype=np.float64) if enc is None else encode(enc, x, bnet.vnet.truncation)
    w = forward_vector(bnet.vnet, z)
    r = metric_project(bnet.codebook, w)
    dist = float(np.sqrt(sq_distances(bnet.codebook.centers[r : r + 1], w)[0]))
    return bnet.codebook.payloads[r], r, dist


@dataclass
class PreimageReport:
    ok: bool
    checked: int
    ties: int
    first_violation: dict | None = field(default=None)

    def __bool__(self):
        return self.ok


def voronoi_preimage_check(codebook: Codebook, samples, project=metric_project) -> PreimageReport:
    """Check that each sample's chosen index ``k`` lies in the preimage of ``a_k``.

    That preimage is ``{D_k <= min_u D_u}`` intersected, for ``k > 0``, with
    ``{D_k < min_{u<k} D_u}``.  ``project`` can be swapped for mutation tests.
    """
    ties = 0
    for s in np.asarray(samples, dtype=np.float64):
        k = project(codebook, s)
        d = sq_distances(codebook.centers, s)
        closed = d[k] <= d.min()
        opened = k == 0 or d[k] < d[:k].min()
        if np.count_nonzero(d == d.min()) > 1:
            ties += 1
        if not (closed and opened):
            return PreimageReport(False, len(samples), ties, {"sample": s.tolist(), "index": int(k)})
    return PreimageReport(True, len(samples), ties)


def save_codebook(cb: Codebook, path):
    with open(path, "w") as fh:
        json.dump(cb.to_json(), fh, sort_keys=True)
        fh.write("\n")
