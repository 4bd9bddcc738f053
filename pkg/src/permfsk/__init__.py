"""Permutation-coded M-ary FSK for power-line channels.

Threshold (multi-valued) noncoherent demodulation, max-agreement decoding,
exact code search and link-budget tools.
"""

from permfsk.permcode import (
    CodeBook,
    UndefinedDistanceError,
    cardinality_bound,
    encode,
    even_permutation_code,
    hamming_distance,
    min_distance,
)
from permfsk.search import CapacityError, SearchReport, search_max_code

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "CodeBook",
    "SearchReport",
    "UndefinedDistanceError",
    "cardinality_bound",
    "encode",
    "even_permutation_code",
    "hamming_distance",
    "min_distance",
    "search_max_code",
]
