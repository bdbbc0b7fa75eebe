"""sbolab: a numerical laboratory for intertwining and symmetry-breaking
operators between degenerate principal series of GL(2n, R) and GL(2n-1, R).

The package is organized bottom-up:

``specfun``
    complex log-Gamma, signed powers, and every Gamma-product
    normalization constant.
``matgroup``
    concrete matrices, minors, and the block Bruhat factorizations.
``quadrature``
    deterministic adaptive tensor-product integration.
``sections``
    principal-series vectors realized on the open cell, with evaluators
    and invariant pairings.
``operators``
    the integral operators themselves (T, S, U, A, B and friends),
    parameter-shift continuation, Mellin transform.
``verify``
    one check per identity, reporting residuals.
``cli``
    batch driver (``sbolab run|sweep|print-defaults``).
"""

from .errors import (
    ConfigError,
    DomainError,
    OutsideCellError,
    PoleError,
    QuadratureError,
    SbolabError,
    TailError,
)
from .specfun import GParams, HParams, SboParams

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DomainError",
    "GParams",
    "HParams",
    "OutsideCellError",
    "PoleError",
    "QuadratureError",
    "SbolabError",
    "SboParams",
    "TailError",
    "__version__",
]
