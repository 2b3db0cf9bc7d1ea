"""Zeroth-order proximal optimization toolkit.

A Gibbs-weighted proximal operator and its Monte Carlo estimator with
effective-sample-size diagnostics, exact reference oracles, proximal-point
iteration loops with lambda continuation, calculators for the associated
theoretical bounds, and a reproducible experiment CLI.
"""

import logging as _logging

_logging.getLogger("zoprox").addHandler(_logging.NullHandler())

from .core import (
    AbsValue,
    Generic,
    GibbsProxParams,
    KappaPlusBounded,
    ObjectiveSpec,
    Quadratic,
    SeedSpec,
    derive_stream,
    erfcx,
    generator,
    log_erfcx,
    log_sum_exp,
)

__version__ = "0.1.0"
