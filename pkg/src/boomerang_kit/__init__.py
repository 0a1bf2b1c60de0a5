"""DDPM forward/reverse machinery and Boomerang local sampling.

Closed-form Gaussian-mixture oracles serve as exact denoisers; a small numpy
MLP with hand-written backprop is the trainable alternative.
"""

from .apps import (
    AugmentationProtocol, PreTask, anonymize_dataset, augmentation_eval, augmentation_sweep,
    downsample, pre_enhance, select_cascade, upsample_linear,
)
from .denoiser import (
    Denoiser, GaussianMixture, OracleDenoiser, oracle_reverse_mean, posterior_mean_x0,
)
from .forward import Sample, forward_jump, forward_step
from .metrics import (
    LocalityReport, TwoSampleReport, locality_sweep, two_sample, train_embedding,
)
from .mlp import (
    MlpDenoiser, NumericalError, TrainConfig, gradient_check, load_checkpoint, mlp_forward,
    save_checkpoint, train_mlp,
)
from .rng import PinnedNoise, SeedStreams
from .sampler import (
    BoomerangConfig, SampleTrace, boomerang, cascade, reverse_step, run_reverse, sample_global,
)
from .schedule import NoiseSchedule, StrideSchedule, build_linear, build_stride

__version__ = "0.1.0"
