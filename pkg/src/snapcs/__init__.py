"""Snapshot compressive sensing with compression-based recovery."""
from .exceptions import SnapCSError
from .rng import RngSpec
from .sensing import (MaskStack, Measurement, MultiFrameSignal, add_noise, adjoint, forward,
                      generate_masks, gram_apply_inverse)
from .codecs import (Dct3dCodec, EnumerableCodebook, IdentityCodec, NlsCodec, NlsParams,
                     build_quantized_sparse_codec, estimate_rate_distortion, project)
from .solvers import (CbGAP, CbPGD, CSPRecovery, SolverConfig, adaptive_step_search,
                      cbgap_recover, cbpgd_recover, compute_metrics, csp_recover)

__version__ = "0.1.0"
