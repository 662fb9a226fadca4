"""Shadowing for nonautonomous systems with (mu, nu)-dichotomies.

Discrete maps ``x_{n+1} = A_n x_n + f_n(x_n)`` and differential equations
``x' = A(t) x + f(t, x)`` (including second-order equations through the
companion lift): certify the linear dichotomy, build the adapted norms,
and compute an exact orbit near a given pseudo-orbit by a contraction
whose constants are explicit.
"""
from .adapted_norms import AdaptedNorm, adapted_norm, verify_norm_lemma
from .certificate import Certificate
from .estimators import ContinuousShadowing, DiscreteShadowing
from .examples import CATALOG, discretize, get_example
from .exceptions import *  # noqa: F401,F403
from .higher_order import (CompanionSystem, SecondOrderSystem, extract_shadow, lift,
                           lift_pseudo_orbit)
from .linear_continuous import (ContinuousProjectionField, EvolutionFamily,
                                certify_dichotomy_continuous, integrate_family)
from .linear_discrete import (DichotomyConstants, DiscreteCocycle, ProjectionField,
                              certify_dichotomy, fit_min_D, unstable_pullback)
from .nonlinearity import (ContinuousNonlinearity, Nonlinearity, sine_nonlinearity,
                           sine_nonlinearity_continuous)
from .oracle import BvpInstance, bvp_solve, compare
from .rates import RatePair, RateSequence, make_rate, sample_rate
from .shadow_continuous import (ContinuousPseudoOrbit, QuadraturePolicy,
                                solve_shadow_continuous, verify_shadow_continuous)
from .shadow_discrete import (PseudoOrbit, ShadowResult, TruncationPolicy, apply_T,
                              solve_shadow, theoretical_constants, verify_shadow)
from .systems import ContinuousSystem, DiscreteSystem

__version__ = "0.1.0"
