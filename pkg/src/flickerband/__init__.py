"""Flicker-banding simulation, Butterworth band splitting, trajectory-alignment
loss and full-reference metrics for screen-capture restoration work."""

__version__ = "0.1.0"

from .imagecore import Domain, ImagePlanes, PairManifest, load_image, save_image  # noqa: E402
from .isp import GammaMode, IspParams, forward_isp, inverse_isp  # noqa: E402
from .banding import (BandingSpec, GainField, Pattern, apply_banding, generate_mask,  # noqa: E402
                      mask_to_gain, synthesize_pair)
from .specband import BandPartition, build_partition, butterworth_lp, decompose, recompose  # noqa: E402
from .traj import (FeatureStack, TAConfig, layer_ta_loss, normalize_channels,  # noqa: E402
                   ta_loss_grad, total_objective, total_ta_loss)
from .metrics import MetricReport, gmsd, ms_ssim, psnr, ssim  # noqa: E402
