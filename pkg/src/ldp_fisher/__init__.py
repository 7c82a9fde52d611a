"""Optimal Fisher information of locally private channels.

Submodules: ``staircase`` (extremal patterns), ``channel`` (finite
mechanisms and LDP certificates), ``factorize`` (extremal factorization),
``finite_fisher`` (finite-model maximization), ``continuous`` (bounds for
densities on the line), ``uniform_sim`` (private uniform-range estimation)
and ``cli``.
"""

from .channel import Channel, LdpCertificate, compose, verify_ldp
from .factorize import ExtremalFactorization, factorize
from .finite_fisher import FiniteModel, closed_form_max, fisher_info, solve_lp
from .staircase import StaircaseMatrix, pattern

__version__ = "0.1.0"

__all__ = [
    "Channel", "ExtremalFactorization", "FiniteModel", "LdpCertificate", "StaircaseMatrix",
    "closed_form_max", "compose", "factorize", "fisher_info", "pattern", "solve_lp", "verify_ldp",
]
