"""Closed-form certificates for the long-run behaviour of the refuge model.

Each function checks the hypotheses of one analytic result and reports the
verdict together with the inequality margins that were evaluated, so a
caller (or the JSON report) can see exactly why a certificate holds or
fails.  Nothing here integrates the dynamics; simulation cross-checks live
in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .equilibria import count_interior_equilibria, find_interior_equilibria
from .model import ModelParams

UNIFORMLY_PERSISTENT = "UniformlyPersistent"
WEAKLY_PERSISTENT = "WeaklyPersistent"
PREY_EXTINCTION = "PreyExtinction"
UNDETERMINED = "Undetermined"

FULL_EXTINCTION = "FullExtinction"
PREY_EXTINCTION_PREDATOR_STATIONARY = "PreyExtinctionPredatorStationary"
STATIONARY = "Stationary"
DETERMINISTIC = "Deterministic"


@dataclass(frozen=True)
class Region:
    """Attracting rectangle [x_lo, x_hi] x [y_lo, y_hi); y_hi is excluded."""

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def contains(self, x: float, y: float, slack: float = 0.0) -> bool:
        return (self.x_lo - slack <= x <= self.x_hi + slack
                and self.y_lo - slack <= y < self.y_hi + slack)

    def to_dict(self) -> dict:
        return {"x_lo": self.x_lo, "x_hi": self.x_hi,
                "y_lo": self.y_lo, "y_hi": self.y_hi}


@dataclass(frozen=True)
class PersistenceReport:
    regime: str
    branch: str
    liminf_x_bound: float | None = None
    limsup_x_bound: float | None = None

    def to_dict(self) -> dict:
        return {"regime": self.regime, "branch": self.branch,
                "liminf_x_bound": self.liminf_x_bound,
                "limsup_x_bound": self.limsup_x_bound}


@dataclass(frozen=True)
class RegimeCertificate:
    holds: bool
    clause: str
    witness: dict

    def to_dict(self) -> dict:
        return {"holds": self.holds, "clause": self.clause,
                "witness": self.witness}


def invariant_region(p: ModelParams) -> Region:
    """The invariant attracting rectangle [m,1] x [k2, 1+k2-m)."""
    return Region(x_lo=p.m, x_hi=1.0, y_lo=p.k2, y_hi=1.0 + p.k2 - p.m)


def persistence_report(p: ModelParams) -> PersistenceReport:
    """Which persistence regime the parameters fall in.

    A positive refuge keeps the prey above m, so m > 0 always gives uniform
    persistence.  With m = 0 the verdict depends on how the predation
    pressure a compares with the half-saturation k1: small pressure
    (a*L < k1, L = 1+k2) still bounds the prey away from zero, the
    intermediate range only bounds it in the limsup sense, and strong
    pressure (k1 < a*k2) drives the prey extinct.
    """
    if p.m > 0:
        return PersistenceReport(UNIFORMLY_PERSISTENT, "refuge",
                                 liminf_x_bound=p.m)

    L = 1.0 + p.k2
    if p.a * L < p.k1:
        return PersistenceReport(UNIFORMLY_PERSISTENT, "weak_predation",
                                 liminf_x_bound=(p.k1 - p.a * L) / p.k1)
    if p.a * p.k2 < p.k1:  # and k1 <= a*L
        c = 1.0 - p.k1 - p.a
        bound = min(p.k1 / p.a - p.k2,
                    0.5 * (c + math.sqrt(c * c + 4.0 * (p.k1 - p.a * p.k2))))
        return PersistenceReport(WEAKLY_PERSISTENT, "intermediate_predation",
                                 limsup_x_bound=bound)
    if p.a * p.k2 == p.k1:
        bound = 1.0 - p.k1 - p.a
        if bound > 0:
            return PersistenceReport(WEAKLY_PERSISTENT, "boundary_predation",
                                     limsup_x_bound=bound)
        return PersistenceReport(PREY_EXTINCTION, "boundary_predation")
    return PersistenceReport(PREY_EXTINCTION, "strong_predation")


def global_stability_condition(p: ModelParams) -> RegimeCertificate:
    """Sufficient condition for a unique globally stable interior equilibrium.

    Requires 2m + k1 >= 1, and for m = 0 additionally
    4*a*k2 <= (1-k1-a)^2 + 4*k1.
    """
    margin1 = 2.0 * p.m + p.k1 - 1.0
    margin2 = (1.0 - p.k1 - p.a) ** 2 + 4.0 * p.k1 - 4.0 * p.a * p.k2
    holds = margin1 >= 0.0 and (p.m > 0 or margin2 >= 0.0)
    return RegimeCertificate(holds, "global_stability", {
        "two_m_plus_k1_minus_1": margin1,
        "discriminant_margin": margin2 if p.m == 0 else None,
    })


def no_cycle_conditions(p: ModelParams) -> list[RegimeCertificate]:
    """All cycle-related certificates, no-cycle and existence side together.

    Each sufficient condition is evaluated independently; a periodic orbit
    is ruled out as soon as any no-cycle certificate holds.  The last entry
    is the existence-side clause: with m = 0 and a single unstable interior
    equilibrium of focus/node type, the attracting region forces at least
    one limit cycle around it.
    """
    out = []

    count = count_interior_equilibria(p)
    out.append(RegimeCertificate(
        p.m == 0 and count.n_predicted in (0, 2),
        "no_cycle_equilibrium_count",
        {"m": p.m, "n": count.n_predicted},
    ))
    out.append(RegimeCertificate(
        p.m == 0 and p.b + p.k1 >= 1.0,
        "no_cycle_b_plus_k1",
        {"m": p.m, "b_plus_k1": p.b + p.k1},
    ))
    dulac = (p.m > 0 and p.k2 > 1.0 - p.m
             and (p.k1 > 1.0 + p.m or p.a * p.k2 + p.k1 > 2.0 + 1.0 / 12.0))
    out.append(RegimeCertificate(dulac, "no_cycle_dulac", {
        "m": p.m, "k2_minus_1_plus_m": p.k2 - (1.0 - p.m),
        "k1_minus_1_plus_m": p.k1 - (1.0 + p.m),
        "ak2_plus_k1": p.a * p.k2 + p.k1,
    }))
    gs = global_stability_condition(p)
    out.append(RegimeCertificate(gs.holds, "no_cycle_global_stability",
                                 gs.witness))

    exists = False
    witness = {"m": p.m, "n": count.n_predicted, "s": None, "p": None}
    if p.m == 0 and count.n_predicted == 1:
        (e,) = find_interior_equilibria(p)
        witness["s"], witness["p"] = e.s, e.p_det
        exists = e.s < 0 and e.p_det > 0
    out.append(RegimeCertificate(exists, "cycle_exists_unstable_interior",
                                 witness))
    return out


def stochastic_regime(p: ModelParams) -> RegimeCertificate:
    """Label the long-run stochastic regime from the noise intensities.

    Prey noise with sigma1^2 >= 2 overwhelms the logistic growth and kills
    the prey; the predator then dies too if sigma2^2 >= 2b, otherwise it
    settles to a one-dimensional stationary law.  Small noise on both
    components with a positive refuge admits a unique joint stationary
    distribution.  Zones not covered by any of these results are labelled
    Undetermined rather than guessed.
    """
    s1sq, s2sq = p.sigma1 ** 2, p.sigma2 ** 2
    witness = {"sigma1_sq": s1sq, "sigma2_sq": s2sq,
               "two_b": 2.0 * p.b, "m": p.m}
    if s1sq == 0.0 and s2sq == 0.0:
        return RegimeCertificate(True, DETERMINISTIC, witness)
    if s1sq >= 2.0 and s2sq >= 2.0 * p.b:
        return RegimeCertificate(True, FULL_EXTINCTION, witness)
    if s1sq >= 2.0 and 0.0 < s2sq < 2.0 * p.b:
        return RegimeCertificate(True, PREY_EXTINCTION_PREDATOR_STATIONARY,
                                 witness)
    if 0.0 < s1sq < 2.0 and 0.0 < s2sq < 2.0 * p.b and p.m > 0:
        return RegimeCertificate(True, STATIONARY, witness)
    return RegimeCertificate(False, UNDETERMINED, witness)
