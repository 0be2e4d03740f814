"""Kan-type skew products over hyperbolic toral automorphisms.

Fiber dynamics at the poles, the number theory of multiplier pairs, the
intersection mechanism, transitivity certificates and intermingled basins.
"""

from .basins import (BasinLabel, BasinRaster, KanEndomorphism, basin_raster, birkhoff_average,
                     classify_basin, intermingling_report, kan_endo)
from .errors import KanskewError
from .families import ConstantFamily, CosineFamily
from .fiber import PoleMap, classify_pole_map, sternberg_linearize
from .intersection import IntervalPair, intersection_pairs, overlap_ratio
from .kernels import BACKEND
from .numtheory import continued_fraction, diophantine_pairs, multiplicative_independence
from .presets import parse_system
from .skew import (KanSystem, StatePoint, build_system, kan_diffeo, strong_stable_holonomy,
                   strong_unstable_holonomy)
from .torus import TorusPoint, analyze_automorphism
from .transitivity import Box, build_certificate, direct_search, random_box, verify_witness

__version__ = "0.1.0"
