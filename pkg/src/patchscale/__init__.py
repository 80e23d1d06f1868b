"""Constant-memory patch-based latent diffusion sampling.

The engine denoises random fixed-size patches against a pre-step snapshot
under a first-denoise-wins ledger, fuses patches with guidance latents by
Fourier phase averaging, composites through an absolute-parity chess mask,
and chains stages into a pixel-space-upsampled cascade. Any noise
predictor satisfying the denoiser contract plugs in; the analytic oracle
denoiser makes the whole pipeline exactly testable.
"""

__version__ = "0.1.0"

from .cascade import (StageResult, StageSpec, oracle_factory_from_image, run_cascade,
                      stage_seed, validate_stages)
from .codec import IdentityCodec, PoolCodec
from .config import RunConfig, parse_config
from .denoisers import Condition, Denoiser, OracleDenoiser, ZeroDenoiser
from .engine import (EngineState, StageStats, StepLedger, blend_paste, denoise_timestep,
                     sample_latent, select_patch)
from .errors import (BoundsError, ConfigError, ContractViolationError, FormatError,
                     NumericError, SchedulingError, ShapeMismatchError, SingularityError)
from .grid import PatchRegion, crop, fft2, ifft2, new_grid, paste
from .guidance import (GuidanceStack, SliderConfig, average_phases, chess_mask,
                       chess_mask_apply, fuse_phase, fuse_spectrum, guidance_at,
                       is_guided, prepare_guidance)
from .pnm import read_image, write_image
from .report import build_report, normalized_report_text, report_text
from .resample import lanczos_resize
from .schedule import (NoiseSchedule, StepPair, add_noise, build_linear_schedule,
                       ddim_step)

__all__ = [
    "__version__",
    "BoundsError", "ConfigError", "Condition", "ContractViolationError", "Denoiser",
    "EngineState", "FormatError", "GuidanceStack", "IdentityCodec", "NoiseSchedule",
    "NumericError", "OracleDenoiser", "PatchRegion", "PoolCodec", "RunConfig",
    "SchedulingError", "ShapeMismatchError", "SingularityError", "SliderConfig",
    "StageResult", "StageSpec", "StageStats", "StepLedger", "StepPair", "ZeroDenoiser",
    "add_noise", "average_phases", "blend_paste", "build_linear_schedule",
    "build_report", "chess_mask", "chess_mask_apply", "crop", "ddim_step",
    "denoise_timestep", "fft2", "fuse_phase", "fuse_spectrum", "guidance_at",
    "ifft2", "is_guided", "lanczos_resize", "new_grid", "normalized_report_text",
    "oracle_factory_from_image", "parse_config", "paste", "prepare_guidance",
    "read_image", "report_text", "run_cascade", "sample_latent", "select_patch",
    "stage_seed", "validate_stages", "write_image",
]
