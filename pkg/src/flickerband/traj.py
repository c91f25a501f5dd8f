"""Trajectory-alignment loss over intermediate feature stacks.

Each ``(n, c)`` spatial map is flattened and L2-normalized; the layer loss is
the mean cosine distance between degraded-input and clean-input maps taken
at the same timestep. Layers are combined with per-layer weights and a
global factor. The network that produces the stacks is not part of this
package; any ``(N, C, H, W)`` activations will do.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Hashable, Mapping, Optional, Sequence

import numpy as np

from . import kernels

log = logging.getLogger(__name__)

DEFAULT_EPS = 1e-8

#: Perceptual term provider: ``(restored, target) -> scalar``. Nothing ships
#: with the package; LPIPS and friends need pretrained networks.
PerceptualMetric = Callable[[np.ndarray, np.ndarray], float]


@dataclass(frozen=True, eq=False)
class FeatureStack:
    data: np.ndarray
    layer_id: Hashable = "layer"
    timestep: int = 0

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 4 or min(arr.shape) < 1:
            raise ValueError(f"feature stack must be (N, C, H, W) with all dims >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("feature stack contains NaN or Inf")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "timestep", int(self.timestep))

    @property
    def rows(self) -> np.ndarray:
        n, c, h, w = self.data.shape
        return np.ascontiguousarray(self.data.reshape(n * c, h * w))


@dataclass(frozen=True)
class TAConfig:
    layer_weights: Mapping[Hashable, float]
    global_gamma: float = 1.0
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        weights = dict(self.layer_weights)
        if any(w < 0 for w in weights.values()):
            raise ValueError("layer weights must be non-negative")
        if not any(w > 0 for w in weights.values()):
            raise ValueError("at least one layer weight must be positive")
        if self.global_gamma < 0:
            raise ValueError("global_gamma must be non-negative")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        object.__setattr__(self, "layer_weights", weights)


def normalize_channels(f: FeatureStack, eps: float = DEFAULT_EPS) -> np.ndarray:
    """``(N, C, H*W)`` array of per-channel unit vectors (zero rows stay zero)."""
    n, c = f.data.shape[:2]
    return kernels.normalize_rows(f.rows, float(eps)).reshape(n, c, -1)


def _check_pair(f_lq: FeatureStack, f_gt: FeatureStack) -> None:
    if f_lq.data.shape != f_gt.data.shape:
        raise ValueError(f"shape mismatch: {f_lq.data.shape} vs {f_gt.data.shape}")
    if f_lq.layer_id != f_gt.layer_id:
        raise ValueError(f"layer mismatch: {f_lq.layer_id!r} vs {f_gt.layer_id!r}")
    if f_lq.timestep != f_gt.timestep:
        raise ValueError(f"timestep mismatch: {f_lq.timestep} vs {f_gt.timestep}")


def layer_ta_loss(f_lq: FeatureStack, f_gt: FeatureStack, eps: float = DEFAULT_EPS) -> float:
    """Mean over ``(n, c)`` of ``1 - cos``; lies in [0, 2]."""
    _check_pair(f_lq, f_gt)
    return float(np.mean(kernels.ta_rows(f_lq.rows, f_gt.rows, float(eps))))


def ta_loss_grad(f_lq: FeatureStack, f_gt: FeatureStack, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Analytic gradient of ``layer_ta_loss`` with respect to ``f_lq.data``.

    Per row, with ``u`` the LQ vector, ``g`` the normalized GT vector and
    ``r = |u| + eps``::

        dL/du = -(g / r - u (u . g) / (r**2 |u|)) / (N C)

    A zero row gets ``-g / (eps N C)``, the one-sided limit along ``g``.
    """
    _check_pair(f_lq, f_gt)
    n, c = f_lq.data.shape[:2]
    g = kernels.ta_grad_rows(f_lq.rows, f_gt.rows, float(eps))
    return g.reshape(f_lq.data.shape) / (n * c)


def total_ta_loss(stacks_lq: Sequence[FeatureStack], stacks_gt: Sequence[FeatureStack],
                  cfg: TAConfig) -> float:
    """``gamma * sum(lambda_l * L_l)`` over the layers present in both lists."""
    lq = {s.layer_id: s for s in stacks_lq}
    gt = {s.layer_id: s for s in stacks_gt}
    if len(lq) != len(stacks_lq) or len(gt) != len(stacks_gt):
        raise ValueError("duplicate layer ids in a stack list")
    one_sided = set(lq) ^ set(gt)
    if one_sided:
        raise ValueError(f"layers present on one side only: {sorted(map(str, one_sided))}")
    timesteps = {s.timestep for s in (*stacks_lq, *stacks_gt)}
    if len(timesteps) > 1:
        raise ValueError(f"stacks span several timesteps: {sorted(timesteps)}")
    unweighted = [l for l in lq if l not in cfg.layer_weights]
    if unweighted:
        raise ValueError(f"no weight configured for layers {sorted(map(str, unweighted))}")
    missing = [l for l, w in cfg.layer_weights.items() if w > 0 and l not in lq]
    if missing:
        raise ValueError(f"weighted layers missing from stacks: {sorted(map(str, missing))}")
    if cfg.global_gamma == 0:
        return 0.0
    total = 0.0
    for layer, f in lq.items():
        lam = cfg.layer_weights[layer]
        if lam:
            total += lam * layer_ta_loss(f, gt[layer], cfg.eps)
    return cfg.global_gamma * total


def per_layer_losses(stacks_lq: Sequence[FeatureStack], stacks_gt: Sequence[FeatureStack],
                     eps: float = DEFAULT_EPS) -> dict:
    gt = {s.layer_id: s for s in stacks_gt}
    return {s.layer_id: layer_ta_loss(s, gt[s.layer_id], eps) for s in stacks_lq}


def mse(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def total_objective(ta: float, perceptual: Optional[float], mse_value: float,
                    lambda_ta: float, lambda_lpips: float, lambda_mse: float) -> float:
    """Weighted training objective. A missing perceptual value counts as 0."""
    if min(lambda_ta, lambda_lpips, lambda_mse) < 0:
        raise ValueError("objective weights must be non-negative")
    if perceptual is None:
        if lambda_lpips:
            log.info("no perceptual value supplied; treating the perceptual term as 0")
        perceptual = 0.0
    return lambda_ta * ta + lambda_lpips * perceptual + lambda_mse * mse_value


@dataclass
class TrainingObjective:
    """Bundles objective weights with an optional perceptual provider."""

    lambda_ta: float
    lambda_lpips: float
    lambda_mse: float
    perceptual: Optional[PerceptualMetric] = field(default=None, repr=False)

    def __call__(self, ta: float, restored: np.ndarray, target: np.ndarray) -> float:
        p = None if self.perceptual is None else float(self.perceptual(restored, target))
        return total_objective(ta, p, mse(restored, target), self.lambda_ta,
                               self.lambda_lpips, self.lambda_mse)
