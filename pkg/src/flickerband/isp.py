"""Analytic invertible ISP: sRGB <-> linear 3-channel pseudo-RAW.

The inverse direction is degamma, inverse color matrix, then division by the
white-balance gains. The forward direction undoes those steps in reverse
order. Clipping to [0, 1] is the only lossy step.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import kernels
from .imagecore import Domain, ImagePlanes

WB_RANGE = (0.25, 4.0)
MAX_CCM_COND = 1e4

_IDENTITY = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))


class GammaMode(str, enum.Enum):
    SRGB_STANDARD = "SRGB_STANDARD"
    PURE_POWER = "PURE_POWER"


@dataclass(frozen=True)
class IspParams:
    wb_gains: tuple[float, float, float] = (1.0, 1.0, 1.0)
    ccm: tuple[tuple[float, ...], ...] = _IDENTITY
    gamma_mode: GammaMode = GammaMode.SRGB_STANDARD
    gamma_exponent: float = 2.2

    def __post_init__(self):
        wb = tuple(float(g) for g in self.wb_gains)
        ccm = tuple(tuple(float(v) for v in row) for row in self.ccm)
        if len(wb) != 3:
            raise ValueError("wb_gains needs 3 entries")
        if not all(WB_RANGE[0] <= g <= WB_RANGE[1] for g in wb):
            raise ValueError(f"wb_gains must lie in {WB_RANGE}, got {wb}")
        m = np.array(ccm)
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise ValueError("ccm must be a finite 3x3 matrix")
        cond = np.linalg.cond(m)
        if not np.isfinite(cond) or cond >= MAX_CCM_COND:
            raise ValueError(f"ccm is singular or ill-conditioned (cond={cond:.3g})")
        if self.gamma_exponent <= 0:
            raise ValueError("gamma_exponent must be positive")
        object.__setattr__(self, "wb_gains", wb)
        object.__setattr__(self, "ccm", ccm)
        object.__setattr__(self, "gamma_mode", GammaMode(self.gamma_mode))
        object.__setattr__(self, "gamma_exponent", float(self.gamma_exponent))

    @classmethod
    def identity(cls) -> "IspParams":
        return cls()

    @classmethod
    def randomized(cls, rng: np.random.Generator) -> "IspParams":
        """Device-diversity draw: wb in [0.7, 1.4], ccm = I + U(+-0.1) off-diagonal, rows summing to 1."""
        wb = rng.uniform(0.7, 1.4, size=3)
        m = np.eye(3) + rng.uniform(-0.1, 0.1, size=(3, 3)) * (1.0 - np.eye(3))
        m /= m.sum(axis=1, keepdims=True)
        return cls(tuple(wb), tuple(map(tuple, m)))

    @property
    def mode_code(self) -> int:
        return 0 if self.gamma_mode is GammaMode.SRGB_STANDARD else 1

    def to_dict(self) -> dict[str, Any]:
        return {
            "wb_gains": list(self.wb_gains),
            "ccm": [list(r) for r in self.ccm],
            "gamma_mode": self.gamma_mode.value,
            "gamma_exponent": self.gamma_exponent,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "IspParams":
        return cls(**{k: d[k] for k in ("wb_gains", "ccm", "gamma_mode", "gamma_exponent") if k in d})


def inverse_isp(img: ImagePlanes, params: IspParams, *, return_clipped: bool = False):
    """Map an sRGB image to linear pseudo-RAW.

    With ``return_clipped`` the number of pixels where any channel had to be
    clipped is returned alongside the image.
    """
    img.require(Domain.SRGB_NONLINEAR)
    inv_ccm = np.linalg.inv(np.array(params.ccm))
    out, clipped = kernels.isp_inverse(img.data, inv_ccm, np.array(params.wb_gains),
                                       params.mode_code, params.gamma_exponent)
    res = ImagePlanes(out, Domain.RAW_LINEAR)
    return (res, clipped) if return_clipped else res


def forward_isp(img: ImagePlanes, params: IspParams, *, return_clipped: bool = False):
    """Map linear pseudo-RAW back to sRGB."""
    img.require(Domain.RAW_LINEAR)
    out, clipped = kernels.isp_forward(img.data, np.array(params.ccm), np.array(params.wb_gains),
                                       params.mode_code, params.gamma_exponent)
    res = ImagePlanes(out, Domain.SRGB_NONLINEAR)
    return (res, clipped) if return_clipped else res
