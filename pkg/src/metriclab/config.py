"""Central numeric tolerances and base error types.

Every module reads its tolerances from one shared record so that test
suites and the CLI agree on what "equal" means at desk scale.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    metric_atol: float = 1e-9        # metric axiom checks on float64 matrices
    weight_atol: float = 1e-12       # probability weights sum to one
    coupling_atol: float = 1e-9      # marginal sums of transport plans
    duality_gap: float = 1e-7        # mandatory primal/dual agreement
    lipschitz_atol: float = 1e-9     # 1-Lipschitz certificates
    hermitian_atol: float = 1e-12    # Hermitian symmetry of matrix fields
    trace_null_atol: float = 1e-9    # tracially null certificates
    eig_atol: float = 1e-10          # operator norms via eigenvalues
    feasibility_atol: float = 1e-9   # max-flow feasibility slack
    quadrature_atol: float = 1e-10   # adaptive Simpson target


TOL = Tolerances()


class DomainError(Exception):
    """Base class for all domain-level failures (CLI exit code 1)."""


class SpaceMismatchError(DomainError):
    """Two objects that must share a metric space do not."""
