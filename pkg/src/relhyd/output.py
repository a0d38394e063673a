"""CSV writers for solution fields and convergence tables.

All reals are printed with 17 significant digits so a round trip through
text preserves the double-precision values bitwise.
"""

from __future__ import annotations

import numpy as np

from .driver import RunResult, recovered_primitives
from .problems import node_grids

_FMT = "%.17g"


def _write_rows(path, header, rows):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_FMT % v for v in row) + "\n")
    except OSError as err:
        raise OSError(f"cannot write {path}: {err}") from err


def write_solution_csv(result: RunResult, path: str):
    """Node-wise primitive dump, row-major by element then node.

    1-D columns: x,rho,v1,p.  2-D columns: x,y,rho,v1,v2,p with elements
    ordered x-major and nodes x-node-major within each element.
    """
    rho, vs, p = recovered_primitives(result)
    coords = node_grids(result.mesh, result.basis)
    if result.mesh.dim == 1:
        cols = [coords[0].ravel(), rho.ravel(), vs[0].ravel(), p.ravel()]
        _write_rows(path, ["x", "rho", "v1", "p"], zip(*cols))
        return
    shape = rho.shape
    x = np.broadcast_to(coords[0], shape)
    y = np.broadcast_to(coords[1], shape)
    cols = [x.ravel(), y.ravel(), rho.ravel(), vs[0].ravel(), vs[1].ravel(), p.ravel()]
    _write_rows(path, ["x", "y", "rho", "v1", "v2", "p"], zip(*cols))


def write_table_csv(rows: list, path: str):
    """Convergence-table dump matching the accuracy-test column layout."""
    header = ["cells", "l1_error", "l1_order", "l2_error", "l2_order",
              "linf_error", "linf_order"]
    _write_rows(path, header, ([row[h] for h in header] for row in rows))


def write_reference_csv(ref, path: str):
    cols = [ref.x, ref.rho, ref.v1, ref.p]
    _write_rows(path, ["x", "rho", "v1", "p"], zip(*cols))
