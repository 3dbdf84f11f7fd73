"""Zero-padding extensions, flat parameter vectors, and the realization map.

``ext1``/``ext3`` pad vectors and ``ext2`` pads a matrix into the leading block
of a larger one; with them a truncation-``N`` network can be evaluated at any
larger truncation ``M`` without changing its output.  ``realize`` turns a flat
parameter vector into the function it defines, going through :mod:`qpnet.net`
so that there is only one numeric path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .activation import ActivationSpec, apply, lipschitz_bound, pad
from .embed import CUBE_NORM_BOUND, EncoderSpec, FunctionSample, encode
from .net import NeuronParams, ScalarNet, forward_scalar


def _check_target(n: int, m: int):
    if m < n:
        raise ValueError(f"cannot extend dimension {n} to smaller dimension {m}")


def ext1(h, m: int) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    _check_target(len(h), m)
    out = np.zeros(m)
    out[: len(h)] = h
    return out


def ext2(beta, m: int) -> np.ndarray:
    beta = np.asarray(beta, dtype=np.float64)
    n = beta.shape[0]
    if beta.shape != (n, n):
        raise ValueError("ext2 needs a square matrix")
    _check_target(n, m)
    out = np.zeros((m, m))
    out[:n, :n] = beta
    return out


def ext3(y, m: int) -> np.ndarray:
    return ext1(y, m)


def ext(neuron: NeuronParams, m: int) -> NeuronParams:
    return NeuronParams(ext1(neuron.h, m), ext2(neuron.B, m), ext3(neuron.y, m))


def pad_net(net: ScalarNet, m: int) -> ScalarNet:
    """The same network living at truncation ``m >= N`` (all new entries zero)."""
    return ScalarNet(m, [ext(nr, m) for nr in net.neurons], pad(net.activation, m), net.encoder)


def param_count(n: int, j: int) -> int:
    return (n * n + 2 * n) * j


def flatten(net: ScalarNet) -> np.ndarray:
    """Flat ``theta``: for each neuron ``h``, then ``B`` row-major, then ``y``."""
    return np.concatenate([np.concatenate([nr.h, nr.B.ravel(), nr.y]) for nr in net.neurons])


def unflatten(theta, n: int, j: int) -> list:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (param_count(n, j),):
        raise ValueError(f"theta has length {theta.size}, expected {param_count(n, j)} for N={n}, J={j}")
    size = n * n + 2 * n
    out = []
    for k in range(j):
        blk = theta[k * size : (k + 1) * size]
        out.append(NeuronParams(blk[:n].copy(), blk[n : n + n * n].reshape(n, n).copy(), blk[n + n * n :].copy()))
    return out


def assemble(theta, n: int, j: int, act: ActivationSpec, enc: EncoderSpec | None = None) -> ScalarNet:
    return ScalarNet(n, unflatten(theta, n, j), act, enc)


def realize(theta, n: int, j: int, act: ActivationSpec, enc: EncoderSpec | None = None):
    """The map ``x -> network output`` defined by ``theta``.

    The returned callable takes a FunctionSample (encoded with ``enc``) or a
    cube point / batch of cube points of length ``n``.
    """
    net = assemble(theta, n, j, act, enc)

    def fn(x):
        if isinstance(x, FunctionSample):
            if enc is None:
                raise ValueError("realization has no encoder; pass cube points instead")
            x = encode(enc, x, n)
        return forward_scalar(net, x)

    fn.net = net
    return fn


# ---------------------------------------------------------------------------
# stability of the realization map


@dataclass
class StabilityRow:
    lhs: float
    rhs: float

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs


def stability_check(p: NeuronParams, p_bar: NeuronParams, inputs, act: ActivationSpec) -> list:
    """Per-input ``(lhs, rhs)`` for the single-neuron realization bound.

    ``lhs = |R(p)(z) - R(p_bar)(z)|`` and
    ``rhs = |h - h_bar| max_z |sigma(Bz + y)| + Lip(sigma) |h_bar| (|B - B_bar|_F |z| + |y - y_bar|)``,
    with the Frobenius norm standing in for the operator norm.
    """
    zs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if p.n != p_bar.n or zs.shape[1] != p.n:
        raise ValueError("dimension mismatch between parameters and inputs")
    net, net_bar = ScalarNet(p.n, [p], act), ScalarNet(p.n, [p_bar], act)
    out, out_bar = forward_scalar(net, zs), forward_scalar(net_bar, zs)
    sig = apply(act, zs @ p.B.T + p.y)
    sig_max = float(np.max(np.linalg.norm(sig, axis=1)))
    lip = lipschitz_bound(act)
    dh = float(np.linalg.norm(p.h - p_bar.h))
    dB = float(np.linalg.norm(p.B - p_bar.B))
    dy = float(np.linalg.norm(p.y - p_bar.y))
    hb = float(np.linalg.norm(p_bar.h))
    rows = []
    for z, a, b in zip(zs, np.atleast_1d(out), np.atleast_1d(out_bar)):
        rhs = dh * sig_max + lip * hb * (dB * float(np.linalg.norm(z)) + dy)
        rows.append(StabilityRow(abs(float(a) - float(b)), rhs))
    return rows


def uniform_bound(p: NeuronParams, p_bar: NeuronParams, act: ActivationSpec) -> float:
    """Input-free version of the rhs using ``|z| <= pi / sqrt(6)`` and ``|sigma| <= |u_plus|``."""
    # |beta| <= 1, so |sigma| <= |u_plus| (rank one) or sqrt(N) (componentwise)
    sig_max = float(np.linalg.norm(act.u_plus)) if hasattr(act, "u_plus") else math.sqrt(p.n)
    return float(
        np.linalg.norm(p.h - p_bar.h) * sig_max
        + lipschitz_bound(act)
        * np.linalg.norm(p_bar.h)
        * (np.linalg.norm(p.B - p_bar.B) * CUBE_NORM_BOUND + np.linalg.norm(p.y - p_bar.y))
    )
