"""Information structures: which receivers a node observes and how the
unobserved remainder of the plane is described.

Five families are supported, all centred balls around the observing node:
nothing, a fixed disk, the k nearest receivers, the k nearest capped by a
fixed disk, and the whole plane. A node's view is the sorted list of
interference coefficients of the observed receivers plus the radius beyond
which the plane is treated as unobserved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelParams, NetworkRealization, cross_distances

__all__ = [
    "StoppingSetSpec",
    "LocalView",
    "kth_nearest_receiver_distance",
    "local_view",
    "local_views",
    "parse_spec",
]

_KINDS = ("empty", "disk", "nearest", "nearestcap", "full")


@dataclass(frozen=True)
class StoppingSetSpec:
    """Symbolic description of the observed region.

    kind: 'empty' | 'disk' | 'nearest' | 'nearestcap' | 'full'
    R: disk radius for 'disk'/'nearestcap'
    k: neighbour count for 'nearest'/'nearestcap'
    """

    kind: str
    R: float = None
    k: int = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown stopping-set kind {self.kind!r}")
        if self.kind in ("disk", "nearestcap"):
            if self.R is None or not self.R > 0:
                raise ValueError(f"kind {self.kind!r} requires R > 0, got {self.R}")
        elif self.R is not None:
            raise ValueError(f"kind {self.kind!r} takes no R")
        if self.kind in ("nearest", "nearestcap"):
            if self.k is None or int(self.k) < 1:
                raise ValueError(f"kind {self.kind!r} requires k >= 1, got {self.k}")
            object.__setattr__(self, "k", int(self.k))
        elif self.k is not None:
            raise ValueError(f"kind {self.kind!r} takes no k")

    @classmethod
    def empty(cls):
        return cls("empty")

    @classmethod
    def disk(cls, R):
        return cls("disk", R=float(R))

    @classmethod
    def nearest(cls, k):
        return cls("nearest", k=k)

    @classmethod
    def nearest_capped(cls, k, R):
        return cls("nearestcap", R=float(R), k=k)

    @classmethod
    def full_plane(cls):
        return cls("full")

    @property
    def deterministic(self) -> bool:
        """True when the observed region does not depend on the pattern."""
        return self.kind in ("empty", "disk")

    def __str__(self):
        if self.kind == "disk":
            return f"disk:R={self.R:g}"
        if self.kind == "nearest":
            return f"nearest:k={self.k}"
        if self.kind == "nearestcap":
            return f"nearestcap:k={self.k},R={self.R:g}"
        return self.kind


def parse_spec(text: str) -> StoppingSetSpec:
    """Parse the canonical text encoding, e.g. 'disk:R=3' or 'nearestcap:k=2,R=5'."""
    head, _, args = text.strip().partition(":")
    head = head.lower()
    fields = {}
    if args:
        for item in args.split(","):
            key, _, value = item.partition("=")
            if not value:
                raise ValueError(f"malformed stopping-set argument {item!r} in {text!r}")
            fields[key.strip()] = value.strip()
    try:
        if head == "empty" and not fields:
            return StoppingSetSpec.empty()
        if head == "full" and not fields:
            return StoppingSetSpec.full_plane()
        if head == "disk" and set(fields) == {"R"}:
            return StoppingSetSpec.disk(float(fields["R"]))
        if head == "nearest" and set(fields) == {"k"}:
            return StoppingSetSpec.nearest(int(fields["k"]))
        if head == "nearestcap" and set(fields) == {"k", "R"}:
            return StoppingSetSpec.nearest_capped(int(fields["k"]), float(fields["R"]))
    except ValueError as exc:
        raise ValueError(f"bad stopping-set string {text!r}: {exc}") from None
    raise ValueError(f"bad stopping-set string {text!r} "
                     f"(expected empty | disk:R=<val> | nearest:k=<int> | "
                     f"nearestcap:k=<int>,R=<val> | full)")


@dataclass(frozen=True)
class LocalView:
    """What one node knows: sorted b-coefficients of observed receivers (own
    receiver excluded) and the radius beyond which the plane is unobserved
    (0 = nothing observed anywhere, inf = everything observed)."""

    observed_b: np.ndarray
    outer_radius: float

    def __post_init__(self):
        b = np.ascontiguousarray(np.asarray(self.observed_b, dtype=float).reshape(-1))
        if b.size and b.min() <= 0:
            raise ValueError("b coefficients must be positive")
        if np.any(np.diff(b) < 0):
            raise ValueError("observed_b must be sorted ascending")
        if self.outer_radius < 0:
            raise ValueError("outer_radius must be >= 0")
        object.__setattr__(self, "observed_b", b)


def kth_nearest_receiver_distance(i: int, realization: NetworkRealization,
                                  k: int) -> float:
    """k-th smallest |y_j - X_i| over j != i (own receiver excluded)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    d = np.linalg.norm(realization.receivers - realization.transmitters[i], axis=1)
    d = np.delete(d, i)
    if d.size < k:
        raise ValueError(f"node {i} has only {d.size} other receivers, need {k}")
    return float(np.partition(d, k - 1)[k - 1])


def local_view(i: int, realization: NetworkRealization,
               spec: StoppingSetSpec, params: ModelParams) -> LocalView:
    """Observed b-coefficients and outer radius of node i under ``spec``."""
    d = np.linalg.norm(realization.receivers - realization.transmitters[i], axis=1)
    d = np.sort(np.delete(d, i))
    return _view_from_sorted(d, spec, params)


def _view_from_sorted(d: np.ndarray, spec: StoppingSetSpec,
                      params: ModelParams) -> LocalView:
    if spec.kind == "empty":
        return LocalView(np.empty(0), 0.0)
    if spec.kind == "full":
        return LocalView(d**params.beta / params.b_scale, np.inf)
    if spec.kind == "disk":
        n_in = int(np.searchsorted(d, spec.R, side="right"))
        return LocalView(d[:n_in] ** params.beta / params.b_scale, spec.R)
    if d.size < spec.k:
        raise ValueError(f"need {spec.k} other receivers, found {d.size}")
    r_k = d[spec.k - 1]
    if spec.kind == "nearest":
        return LocalView(d[:spec.k] ** params.beta / params.b_scale, float(r_k))
    # nearestcap: the k nearest, or fewer if the cap disk holds fewer
    n_in = min(spec.k, int(np.searchsorted(d, spec.R, side="right")))
    outer = min(float(r_k), spec.R)
    return LocalView(d[:n_in] ** params.beta / params.b_scale, outer)


def local_views(realization: NetworkRealization, spec: StoppingSetSpec,
                params: ModelParams):
    """Views of every node at once.

    Returns (b_flat, offsets, outer_x) ready for the batch solver: node i
    observes b_flat[offsets[i]:offsets[i+1]] and outer_x[i] is its outer
    radius in units of r.
    """
    n = realization.n_nodes
    if spec.kind == "empty":
        return (np.empty(0), np.zeros(n + 1, dtype=np.int64), np.zeros(n))
    d = cross_distances(realization)  # row i: |X_i - y_j| over j
    np.fill_diagonal(d, np.inf)
    d.sort(axis=1)
    d = d[:, :-1]  # drop the inf own-receiver slot

    if spec.kind == "full":
        counts = np.full(n, d.shape[1], dtype=np.int64)
        outer_x = np.full(n, np.inf)
        kept = d
    elif spec.kind == "disk":
        counts = (d <= spec.R).sum(axis=1).astype(np.int64)
        outer_x = np.full(n, spec.R / params.r)
        kept = d
    else:
        if d.shape[1] < spec.k:
            raise ValueError(f"need {spec.k} other receivers, found {d.shape[1]}")
        r_k = d[:, spec.k - 1]
        if spec.kind == "nearest":
            counts = np.full(n, spec.k, dtype=np.int64)
            outer_x = r_k / params.r
        else:
            counts = np.minimum(spec.k, (d <= spec.R).sum(axis=1)).astype(np.int64)
            outer_x = np.minimum(r_k, spec.R) / params.r
        kept = d
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    cols = np.arange(kept.shape[1])
    mask = cols[None, :] < counts[:, None]
    b_flat = kept[mask] ** params.beta / params.b_scale
    return b_flat, offsets, outer_x
