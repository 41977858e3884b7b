"""Exact Novikov-ring algebra, toric defect bounds, and Hofer-distance
certificates for conformally symplectic embeddings of the bidisk into
S^2 x S^2."""

from . import geometry, novikov, qmcalc, toric
from .laurent import LaurentPolynomial
from .novikov import INF, NovikovScalar, format_novikov, parse_novikov

__version__ = "0.1.0"

__all__ = [
    "INF",
    "LaurentPolynomial",
    "NovikovScalar",
    "format_novikov",
    "geometry",
    "novikov",
    "parse_novikov",
    "qmcalc",
    "toric",
]
