"""Physical network model: bipole geometry, path loss, and conditional
success probabilities.

Everything here is a pure function of its arguments. Success probabilities
are the fading-averaged expressions conditional on the node pattern, so no
fading samples appear (those only matter for the acknowledgement-based
estimator in :mod:`pfaloha.simulate`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels

__all__ = [
    "ModelParams",
    "NetworkRealization",
    "MapAssignment",
    "b_coeff",
    "success_prob",
    "success_probs",
    "log_throughput",
    "cross_distances",
]


@dataclass(frozen=True)
class ModelParams:
    """Physical and protocol constants.

    density        transmitters per unit area (> 0)
    r              transmitter-receiver separation (> 0)
    beta           path-loss exponent (> 2, else tail integrals diverge)
    sinr_threshold minimum SINR for a successful decode (> 0)
    mu             inverse mean fading power (> 0)
    noise          thermal noise variance (>= 0)
    ack_power      acknowledgement transmit power (> 0)
    """

    density: float = 0.25
    r: float = 1.0
    beta: float = 4.0
    sinr_threshold: float = 10.0
    mu: float = 1.0
    noise: float = 0.0
    ack_power: float = 1.0

    def __post_init__(self):
        if not self.density > 0:
            raise ValueError(f"density must be > 0, got {self.density}")
        if not self.r > 0:
            raise ValueError(f"r must be > 0, got {self.r}")
        if not self.beta > 2:
            raise ValueError(f"beta must be > 2, got {self.beta}")
        if not self.sinr_threshold > 0:
            raise ValueError(f"sinr_threshold must be > 0, got {self.sinr_threshold}")
        if not self.mu > 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if self.noise < 0:
            raise ValueError(f"noise must be >= 0, got {self.noise}")
        if not self.ack_power > 0:
            raise ValueError(f"ack_power must be > 0, got {self.ack_power}")

    @property
    def b_scale(self) -> float:
        """Normalisation T * r**beta of the interference coefficients."""
        return self.sinr_threshold * self.r**self.beta


@dataclass(frozen=True)
class NetworkRealization:
    """One sampled network in the square window [0, L]^2.

    The receiver of node i sits at distance ``r`` from its transmitter in
    direction ``receiver_angles[i]`` (receivers may stick out of the window).
    ``seed`` records RNG provenance; None for hand-built patterns.
    """

    window_side: float
    transmitters: np.ndarray  # (N, 2)
    receiver_angles: np.ndarray  # (N,)
    r: float = 1.0
    seed: object = None

    def __post_init__(self):
        tx = np.ascontiguousarray(np.asarray(self.transmitters, dtype=float).reshape(-1, 2))
        ang = np.ascontiguousarray(np.asarray(self.receiver_angles, dtype=float).reshape(-1))
        if tx.shape[0] != ang.shape[0]:
            raise ValueError("one receiver angle per transmitter required")
        if tx.size and (tx.min() < 0 or tx.max() > self.window_side):
            raise ValueError("transmitters must lie inside [0, window_side]^2")
        object.__setattr__(self, "transmitters", tx)
        object.__setattr__(self, "receiver_angles", ang)

    @cached_property
    def receivers(self) -> np.ndarray:
        ang = self.receiver_angles
        return self.transmitters + self.r * np.c_[np.cos(ang), np.sin(ang)]

    @property
    def n_nodes(self) -> int:
        return self.transmitters.shape[0]


@dataclass(frozen=True)
class MapAssignment:
    """Per-node medium access probabilities, all in [0, 1]."""

    maps: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(np.asarray(self.maps, dtype=float).reshape(-1))
        if p.size and (p.min() < 0.0 or p.max() > 1.0):
            raise ValueError("MAPs must lie in [0, 1]")
        object.__setattr__(self, "maps", p)


def b_coeff(x_j, y_i, params: ModelParams) -> float:
    """Interference coefficient |x_j - y_i|**beta / (T r**beta).

    Raises for coincident points (singular path loss).
    """
    d = math.dist(tuple(x_j), tuple(y_i))
    if d == 0.0:
        raise ValueError("transmitter and receiver coincide: path loss is singular")
    return d**params.beta / params.b_scale


def cross_distances(realization: NetworkRealization) -> np.ndarray:
    """D[i, j] = |X_i - y_j|: transmitter i to the receiver of node j."""
    diff = realization.transmitters[:, None, :] - realization.receivers[None, :, :]
    return np.sqrt((diff**2).sum(axis=-1))


def success_probs(realization: NetworkRealization,
                  maps: MapAssignment, params: ModelParams) -> np.ndarray:
    """Vector of q_i for every node, interferers taken over the whole pattern.

    q_i = exp(-mu*T*r^beta*W) * prod_{j != i} (1 - p_j / (1 + b_ji)),
    accumulated in log space so large node counts do not underflow.
    """
    p = maps.maps
    if p.shape[0] != realization.n_nodes:
        raise ValueError("need one MAP per node")
    logq = _kernels.log_success_probs(
        realization.transmitters, realization.receivers, p,
        params.sinr_threshold, params.r, params.beta,
    )
    noise_exp = -params.mu * params.b_scale * params.noise
    return np.exp(noise_exp + logq)


def success_prob(i: int, realization: NetworkRealization,
                 maps: MapAssignment, params: ModelParams) -> float:
    """Conditional success probability q_i of node i given the geometry."""
    return float(success_probs(realization, maps, params)[i])


def log_throughput(i: int, realization: NetworkRealization,
                   maps: MapAssignment, params: ModelParams) -> float:
    """log(p_i * q_i); -inf when p_i = 0."""
    p = maps.maps[i]
    if p == 0.0:
        return -math.inf
    q = success_prob(i, realization, maps, params)
    if q == 0.0:
        return -math.inf
    return math.log(p) + math.log(q)
