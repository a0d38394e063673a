"""Quadrature error norms and grid-convergence studies."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .driver import RunConfig, RunResult, recovered_primitives, run
from .problems import node_grids


@dataclass(frozen=True)
class ErrorReport:
    l1: float
    l2: float
    linf: float


def density_error_norms(result: RunResult, exact_rho=None) -> ErrorReport:
    """L1/L2/Linf of the nodal density error against the exact solution."""
    prob = result.problem
    exact_fn = exact_rho if exact_rho is not None else prob.exact_rho
    if exact_fn is None:
        raise ValueError(f"problem {prob.name} has no exact solution")
    rho, _, _ = recovered_primitives(result)
    basis, mesh = result.basis, result.mesh
    coords = node_grids(mesh, basis)
    if mesh.dim == 1:
        exact = exact_fn(coords[0], result.t)
        err = np.abs(rho - exact)
        cell = mesh.spacing[0]
        w = basis.weights
        l1 = cell * float(np.einsum("en,n->", err, w))
        l2 = math.sqrt(cell * float(np.einsum("en,n->", err ** 2, w)))
    else:
        shape = rho.shape
        x = np.broadcast_to(coords[0], shape)
        y = np.broadcast_to(coords[1], shape)
        exact = exact_fn(x, y, result.t)
        err = np.abs(rho - exact)
        cell = mesh.spacing[0] * mesh.spacing[1]
        w = basis.weights
        l1 = cell * float(np.einsum("exij,i,j->", err, w, w))
        l2 = math.sqrt(cell * float(np.einsum("exij,i,j->", err ** 2, w, w)))
    return ErrorReport(l1=l1, l2=l2, linf=float(err.max()))


def observed_orders(errors: list) -> list:
    """log2 ratios between successive errors (grids must double)."""
    return [math.log2(a / b) for a, b in zip(errors, errors[1:])]


def convergence_study(config: RunConfig, cell_list) -> list:
    """Run a smooth problem over doubling grids; rows match the tables
    produced for the accuracy tests: cells, then error and order per norm."""
    cell_list = [int(c) for c in cell_list]
    for a, b in zip(cell_list, cell_list[1:]):
        if b != 2 * a:
            raise ValueError(f"cell counts must double: {cell_list}")
    rows = []
    prev = None
    for cells in cell_list:
        cfg = RunConfig(**{**config.__dict__, "cells": (cells,)})
        result = run(cfg)
        rep = density_error_norms(result)
        row = {
            "cells": cells,
            "l1_error": rep.l1, "l1_order": float("nan"),
            "l2_error": rep.l2, "l2_order": float("nan"),
            "linf_error": rep.linf, "linf_order": float("nan"),
        }
        if prev is not None:
            row["l1_order"] = math.log2(prev.l1 / rep.l1)
            row["l2_order"] = math.log2(prev.l2 / rep.l2)
            row["linf_order"] = math.log2(prev.linf / rep.linf)
        rows.append(row)
        prev = rep
    return rows


def density_l1_distance(result: RunResult, reference) -> float:
    """Quadrature L1 distance between nodal density and a reference curve."""
    rho, _, _ = recovered_primitives(result)
    x = node_grids(result.mesh, result.basis)[0]
    ref_rho, _, _ = reference.sample(x.ravel())
    err = np.abs(rho - ref_rho.reshape(rho.shape))
    return result.mesh.spacing[0] * float(
        np.einsum("en,n->", err, result.basis.weights))
