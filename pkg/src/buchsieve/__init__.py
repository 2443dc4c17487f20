"""Buchstab-integral deficiencies, sieve parameters, the partition walk and
desk-scale arithmetic checks for primes with a large prime factor in short
intervals."""

from .buchstab import DomainError, omega2, omega_exact, omega_upper
from .integrator import DeficiencyReport, IntegralEstimate, deficiency, total_deficiency
from .regions import REGION_NAMES, Region, build_region, contains
from .sieve_setup import SieveParams, beta_of_r, minimize_beta, setup_params

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "omega_exact",
    "omega_upper",
    "omega2",
    "Region",
    "REGION_NAMES",
    "build_region",
    "contains",
    "IntegralEstimate",
    "DeficiencyReport",
    "deficiency",
    "total_deficiency",
    "SieveParams",
    "beta_of_r",
    "minimize_beta",
    "setup_params",
]
