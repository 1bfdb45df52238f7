"""Renewal sequences, their generating functions and the flat-point
constructions that decide how regular ``1/(1-F)`` can be."""

from .errors import (CertificationError, DomainError, PoleError, PreconditionError,
                     PrecisionExhausted, QuadratureError, RenewalGFError, RootError,
                     SubsequenceNotFound, TailOverlapError)
from .seqcore import (CoefficientSequence, ExpPolynomial, MomentFunctionals, WeightSpec,
                      derivative_bound, is_aperiodic, moment_functionals, one_minus_eval,
                      reciprocal_ratio, weighted_norm)
from .reports import VerificationReport, emit_report

__version__ = "0.1.0"
