from .base import Codec, CodecDescriptor
from .nls import Dct3dCodec, aggregate_blocks, NlsCode, NlsCodec, NlsGroup, NlsParams, nls_decode, nls_encode
from .ratedist import average_distortion, estimate_rate_distortion, fit_alpha_dimension
from .toy import (EnumerableCodebook, IdentityCodec, build_quantized_sparse_codec,
                  quantization_grid, random_codebook)


def project(codec, s, iteration=None):
    """``g(f(s))`` for any codec."""
    return codec.project(s, iteration=iteration)


def make_codec(name: str, **kwargs):
    """Codec factory used by the command line (``toy`` needs ``codewords``)."""
    if name == "nls":
        return NlsCodec(**kwargs)
    if name == "dct3d":
        return Dct3dCodec(**kwargs)
    if name == "toy":
        return EnumerableCodebook(**kwargs)
    if name == "identity":
        return IdentityCodec()
    raise ValueError(f"unknown codec {name!r}")


__all__ = [
    "Codec", "CodecDescriptor", "Dct3dCodec", "EnumerableCodebook", "IdentityCodec",
    "NlsCode", "NlsCodec", "NlsGroup", "NlsParams", "aggregate_blocks", "average_distortion",
    "build_quantized_sparse_codec", "estimate_rate_distortion", "fit_alpha_dimension",
    "make_codec", "nls_decode", "nls_encode", "project", "quantization_grid", "random_codebook",
]
