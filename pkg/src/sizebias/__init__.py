"""Size-biased distributions: the transform, its structural rules, infinitely
divisible laws through their Levy measures, renewal waiting times, Midzuno
ratio estimation and the Dickman/Buchstab functions."""

from .dist import (
    Atoms,
    Distribution,
    Empirical,
    Family,
    GridDensity,
    IndependentSum,
    Mixture,
    SizeBiasError,
    atoms,
    degenerate,
    family,
    moment,
    parse_distribution,
    quantile_couple,
    sample,
    size_bias,
    to_grid,
)
from .grid import GridFunction
from .levy import LevyMeasure, build_infdiv, deconvolution_check, steutel_increment, verify_steutel
from .rules import iid_sum_bias, product_bias, scale, sum_bias
from .streams import stream

__version__ = "0.1.0"
