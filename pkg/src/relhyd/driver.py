"""Run configuration and the time-marching driver."""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import blending, lwfr, problems
from .basis import BasisData, Mesh, build_basis
from .blending import BlendConfig, StepStats
from .eos import EosModel
from .lwfr import RhdFluxModel, element_mean
from .problems import PROBLEMS, ProblemSpec


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass
class RunConfig:
    problem: str
    eos: EosModel = None            # problem default when omitted
    degree: int = 3
    cells: tuple = (64,)
    t_final: float = None           # problem default when omitted
    safety: float = None            # problem default when omitted
    alpha_max: float = None         # problem default when omitted
    correction: str = "radau"
    cfl_table: dict = None
    jet_pressure: float = None
    recovery_tol: float = 1e-12
    recovery_max_iter: int = 100

    def resolve(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(
                f"unknown problem {self.problem!r}; choose from "
                f"{sorted(PROBLEMS)}")
        prob = PROBLEMS[self.problem]
        eos = self.eos if self.eos is not None else prob.default_eos
        t_final = self.t_final if self.t_final is not None else prob.t_final
        safety = self.safety if self.safety is not None else prob.default_safety
        alpha_max = self.alpha_max if self.alpha_max is not None else prob.alpha_max
        return prob, eos, t_final, safety, alpha_max


@dataclass
class RunResult:
    u: np.ndarray
    mesh: Mesh
    basis: BasisData
    eos: EosModel
    problem: ProblemSpec
    t: float
    steps: int
    wall_time: float
    stats: StepStats = field(default_factory=StepStats)


def _apply_thread_cap():
    cap = os.environ.get("RHD_THREADS")
    if cap:
        try:
            import numba
            numba.set_num_threads(max(1, int(cap)))
        except (ImportError, ValueError):
            pass


def run(config: RunConfig, callback=None) -> RunResult:
    """March a problem to its final time with the blended scheme.

    `callback(t, u, stats)` is invoked after every step when given.
    Deterministic for a fixed configuration; raises AdmissibilityError if
    the scheme ever produces an inadmissible state.
    """
    _apply_thread_cap()
    prob, eos, t_final, safety, alpha_max = config.resolve()
    if config.degree not in blending.DEFAULT_CFL:
        raise ConfigError(f"degree must be 1..4, got {config.degree}")

    mesh = prob.make_mesh(config.cells)
    basis = build_basis(config.degree, correction=config.correction)
    model = RhdFluxModel(eos, dim=mesh.dim, tol=config.recovery_tol,
                         max_iter=config.recovery_max_iter)

    params = {}
    if prob.name == "jet":
        params["jet_pressure"] = (config.jet_pressure if config.jet_pressure
                                  is not None else problems.jet_beam_pressure(eos))

    u = problems.init_field(prob, mesh, basis, eos, params)
    if not _field_admissible(u):
        raise ConfigError(f"initial data of {prob.name} is not admissible")

    extend = problems.make_extender(prob, mesh, basis, eos, params)
    blend_cfg = BlendConfig(safety_factor=safety).with_alpha_max(alpha_max)
    if config.cfl_table:
        blend_cfg = BlendConfig(indicator=blend_cfg.indicator,
                                cfl_table=dict(config.cfl_table),
                                safety_factor=safety)

    agg = StepStats()
    t = 0.0
    steps = 0
    tic = time.perf_counter()
    while t < t_final * (1.0 - 1e-12):
        dt = _stable_dt(u, model, basis, mesh, blend_cfg, config.degree)
        dt = min(dt, t_final - t)
        bound = (lambda uu: extend(uu, t))
        if mesh.dim == 1:
            u, st = blending.step_1d(u, bound, model, basis, mesh.spacing[0],
                                     dt, blend_cfg)
        else:
            u, st = blending.step_2d(u, bound, model, basis, mesh.spacing,
                                     dt, blend_cfg)
        agg.absorb(st)
        t += dt
        steps += 1
        if callback is not None:
            callback(t, u, st)
    wall = time.perf_counter() - tic
    return RunResult(u=u, mesh=mesh, basis=basis, eos=eos, problem=prob,
                     t=t, steps=steps, wall_time=wall, stats=agg)


def _stable_dt(u, model, basis, mesh, blend_cfg, degree) -> float:
    mean = element_mean(u, basis, mesh.dim)
    prims = model.recover(mean, context="time-step element means")
    lams = model.wave_speeds(prims)
    return blending.compute_dt(lams, mesh.spacing, degree, blend_cfg)


def _field_admissible(u) -> bool:
    from . import rhd
    dens, excess = rhd.admissibility(u)
    return bool(np.all(dens > 0.0) and np.all(excess > 0.0))


def recovered_primitives(result: RunResult):
    """Nodal primitives (rho, [v...], p) of a finished run."""
    model = RhdFluxModel(result.eos, dim=result.mesh.dim)
    return model.recover(result.u, context="output")
