"""The subgradient descent loop with cone-guided directions.

Each iteration: restore the locality conditions by small random
perturbation if needed, evaluate the distance and its achieving pairs,
build the feasibility cone, pick the Chebyshev direction of the negated
active-gradient hull inside the cone, and step by a fraction of the
per-pair limits. Terminates on the distance threshold, the iteration cap,
or a certificate (empty cone interior / empty feasible set).

Step rules: "conservative" takes half the smallest limit and is made
strictly monotone by halving the step until the distance actually drops
(the pure half-min step only guarantees decrease of the active terms);
"aggressive" takes half the largest limit, "random" half a uniformly
chosen one, and "hybrid" switches from aggressive to conservative at a
configurable iteration.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import solvers
from .cone import build_cone, descent_direction
from .errors import (
    EmptyTaus,
    IterationLimit,
    LPNumericalFailure,
    PerturbationBudgetExceeded,
    SolverRetryFailed,
)
from .geom import Polytope, Zonotope, canonicalize
from .hausdorff import check_locality, coarse_hausdorff_distance, hausdorff_distance
from .subgrad import SubdifferentialSet, gradients_for_pairs, params_to_zonotope, zonotope_to_params

__all__ = [
    "DescentConfig",
    "TraceRecord",
    "DescentTrace",
    "choose_step",
    "perturb_until_local",
    "optimize",
]

TRACE_CSV_COLUMNS = ("iter", "d_exact", "d_coarse", "step", "rule",
                     "active_pairs", "cone_status", "ms")

# Backtracking budget for the monotone conservative rule.
_MAX_HALVINGS = 60


@dataclass(frozen=True)
class DescentConfig:
    """Everything a run needs besides the polytope and the start zonotope."""

    rank: int
    max_steps: int = 500
    threshold: float = 1e-9
    step_rule: str = "conservative"  # conservative | random | aggressive | hybrid
    hybrid_switch: int | None = None  # default: max_steps // 3
    rng_seed: int = 0
    perturb_scale: float = 1e-6  # relative to the largest generator norm
    objective: str = "exact"  # exact | coarse
    max_perturb_tries: int = 50
    tol_active: float = 1e-7
    cone_margin: float = 1e-8
    cone_fallback: bool = False
    solver: solvers.SolverConfig = field(default_factory=solvers.SolverConfig)

    def __post_init__(self):
        if self.max_steps < 1 or self.threshold < 0.0 or self.perturb_scale <= 0.0:
            raise ValueError("need max_steps >= 1, threshold >= 0, perturb_scale > 0")
        if self.step_rule not in ("conservative", "random", "aggressive", "hybrid"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")
        if self.objective not in ("exact", "coarse"):
            raise ValueError(f"unknown objective {self.objective!r}")

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "max_steps": self.max_steps,
            "threshold": self.threshold,
            "step_rule": self.step_rule,
            "hybrid_switch": self.hybrid_switch,
            "rng_seed": self.rng_seed,
            "perturb_scale": self.perturb_scale,
            "objective": self.objective,
            "max_perturb_tries": self.max_perturb_tries,
            "tol_active": self.tol_active,
            "cone_margin": self.cone_margin,
            "cone_fallback": self.cone_fallback,
        }

    @staticmethod
    def from_json(data: dict) -> "DescentConfig":
        return DescentConfig(**{k: v for k, v in data.items()
                                if k in DescentConfig.__dataclass_fields__})


@dataclass(frozen=True)
class TraceRecord:
    """One iteration: distances at the point stepped from, the step taken,
    and the direction-search status. ``perturb_tries`` counts locality
    perturbations applied before the distances were measured (not a CSV
    column)."""

    iteration: int
    d_exact: float
    d_coarse: float
    step_size: float
    rule: str
    active_pairs: int
    cone_status: str
    ms: float
    perturb_tries: int = 0


@dataclass
class DescentTrace:
    records: list
    termination: str = ""  # threshold | max_steps | certificate_or_feasible_empty | stalled
    certificate: str | None = None
    solver_retries: int = 0

    def csv_header(self) -> str:
        return ",".join(TRACE_CSV_COLUMNS)

    def csv_rows(self):
        for r in self.records:
            yield ",".join([
                str(r.iteration),
                f"{r.d_exact:.17g}",
                f"{r.d_coarse:.17g}",
                f"{r.step_size:.17g}",
                r.rule,
                str(r.active_pairs),
                r.cone_status,
                f"{r.ms:.3f}",
            ])

    def to_csv(self) -> str:
        return "\n".join([self.csv_header(), *self.csv_rows()]) + "\n"

    def math_columns(self):
        """Everything except wall time, for bitwise reproducibility checks."""
        return [(r.iteration, f"{r.d_exact:.17g}", f"{r.d_coarse:.17g}",
                 f"{r.step_size:.17g}", r.rule, r.active_pairs, r.cone_status)
                for r in self.records]

    @property
    def final_exact(self) -> float:
        return self.records[-1].d_exact if self.records else float("nan")

    @property
    def final_coarse(self) -> float:
        return self.records[-1].d_coarse if self.records else float("nan")


def choose_step(rule: str, taus, rng, iteration: int = 0,
                switch_at: int | None = None) -> tuple[float, str]:
    """Step size per the named rule; returns (h, effective_rule).

    conservative: half the smallest limit (all pairs improve);
    random: half a uniformly chosen limit; aggressive: half the largest
    (at least the chosen pair improves); hybrid: aggressive before
    ``switch_at``, conservative after.
    """
    taus = list(taus)
    if not taus:
        raise EmptyTaus("no step limits to choose from")
    effective = rule
    if rule == "hybrid":
        effective = "aggressive" if (switch_at is None or iteration < switch_at) else "conservative"
    if effective == "conservative":
        return 0.5 * min(taus), effective
    if effective == "aggressive":
        return 0.5 * max(taus), effective
    if effective == "random":
        return 0.5 * float(rng.choice(taus)), effective
    raise ValueError(f"unknown step rule {rule!r}")


def perturb_until_local(poly: Polytope, z: Zonotope, sigma: float, rng,
                        max_tries: int = 50,
                        config: solvers.SolverConfig = solvers.DEFAULT_CONFIG):
    """Perturb the zonotope entrywise-uniformly until locality holds.

    Returns (zonotope, tries); unchanged input counts as zero tries. The
    amplitude is ``sigma`` times the largest generator norm per try.
    """
    current = z
    for tries in range(max_tries + 1):
        if check_locality(poly, current, config=config).ok:
            return current, tries
        amp = sigma * max(current.scale(), 1e-12)
        G = current.generators + rng.uniform(-amp, amp, size=current.generators.shape)
        mu = current.translation + rng.uniform(-amp, amp, size=current.dim)
        current = Zonotope(G, mu)
    raise PerturbationBudgetExceeded(
        f"locality not restored within {max_tries} perturbations"
    )


def _distances(poly, z, cfg):
    d_exact, pairs_exact = hausdorff_distance(poly, z, cfg.tol_active, cfg.solver)
    d_coarse, pairs_coarse = coarse_hausdorff_distance(poly, z, cfg.tol_active, cfg.solver)
    if cfg.objective == "coarse":
        return d_exact, d_coarse, d_coarse, pairs_coarse
    return d_exact, d_coarse, d_exact, pairs_exact


def optimize(poly: Polytope, z0: Zonotope, cfg: DescentConfig):
    """Run the descent loop; returns (zonotope, trace).

    Deterministic given (poly, z0, cfg): the only randomness is the seeded
    generator used for locality perturbations and the random step rule.
    Solver failures are retried once after a perturbation, then abort.
    """
    if z0.rank != cfg.rank:
        raise ValueError(f"start zonotope has rank {z0.rank}, config says {cfg.rank}")
    if z0.dim != poly.dim:
        raise ValueError("zonotope and polytope dimensions differ")

    rng = np.random.default_rng(cfg.rng_seed)
    switch_at = cfg.hybrid_switch if cfg.hybrid_switch is not None else cfg.max_steps // 3
    z = canonicalize(z0)
    trace = DescentTrace(records=[])
    iteration = 0
    retried = False
    carried = None  # evaluation reused from the accepted backtracking probe
    shrink = 1.0  # adaptive starting fraction for conservative backtracking

    while True:
        t0 = time.perf_counter()
        try:
            # Threshold and iteration cap are judged at the current
            # zonotope; the locality perturbation only gates the
            # subgradient machinery below.
            if carried is not None:
                d_exact, d_coarse, d, pairs = carried
                carried = None
            else:
                d_exact, d_coarse, d, pairs = _distances(poly, z, cfg)
            tries = 0

            def record(step, rule, status):
                trace.records.append(TraceRecord(
                    iteration=iteration, d_exact=d_exact, d_coarse=d_coarse,
                    step_size=step, rule=rule, active_pairs=len(pairs),
                    cone_status=status,
                    ms=(time.perf_counter() - t0) * 1e3,
                    perturb_tries=tries,
                ))

            if d <= cfg.threshold:
                record(0.0, "-", "none")
                trace.termination = "threshold"
                return z, trace
            if iteration >= cfg.max_steps:
                record(0.0, "-", "none")
                trace.termination = "max_steps"
                return z, trace

            z, tries = perturb_until_local(poly, z, cfg.perturb_scale, rng,
                                           cfg.max_perturb_tries, cfg.solver)
            if tries:
                d_exact, d_coarse, d, pairs = _distances(poly, z, cfg)
                if d <= cfg.threshold:
                    record(0.0, "-", "none")
                    trace.termination = "threshold"
                    return z, trace

            cone = build_cone(pairs)
            subdiff = SubdifferentialSet(
                gradients=gradients_for_pairs(poly, z, pairs, cfg.objective),
                pairs=tuple(pairs),
                objective=cfg.objective,
            )
            result = descent_direction(
                poly, z, subdiff, cone,
                objective=cfg.objective, margin=cfg.cone_margin,
                cone_fallback=cfg.cone_fallback, config=cfg.solver,
            )
            if result.status != "descent":
                record(0.0, "-", result.status)
                trace.termination = "certificate_or_feasible_empty"
                trace.certificate = result.certificate
                return z, trace

            h, effective = choose_step(cfg.step_rule, result.taus, rng,
                                       iteration, switch_at)
            params = zonotope_to_params(z)
            if effective == "conservative":
                # Enforce the rule's strict-decrease guarantee: the raw
                # half-min step only shrinks the active terms, so halve
                # until the full distance drops. The starting fraction
                # adapts to the last productive step to keep probes cheap.
                h_rule = h
                h = h_rule * shrink
                ok = False
                for _ in range(_MAX_HALVINGS):
                    z_next = canonicalize(params_to_zonotope(
                        params + h * result.direction, z.rank, z.dim))
                    cand = _distances(poly, z_next, cfg)
                    if cand[2] < d:
                        ok = True
                        break
                    h *= 0.5
                if not ok:
                    record(0.0, effective, "stalled")
                    trace.termination = "stalled"
                    return z, trace
                shrink = min(1.0, 2.0 * h / h_rule)
                carried = cand
                record(h, effective, "descent")
                z = z_next
            else:
                record(h, effective, "descent")
                z = canonicalize(params_to_zonotope(
                    params + h * result.direction, z.rank, z.dim))
            iteration += 1
            retried = False
        except (IterationLimit, LPNumericalFailure) as exc:
            if retried:
                raise SolverRetryFailed(
                    f"solver failed twice at iteration {iteration}: {exc}"
                ) from exc
            trace.solver_retries += 1
            retried = True
            carried = None
            amp = cfg.perturb_scale * max(z.scale(), 1e-12)
            z = Zonotope(
                z.generators + rng.uniform(-amp, amp, size=z.generators.shape),
                z.translation + rng.uniform(-amp, amp, size=z.dim),
            )
