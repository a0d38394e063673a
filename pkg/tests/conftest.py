import numpy as np
import pytest

from relhyd import eos as eos_mod
from relhyd.eos import EosKind, EosModel

ALL_EOS = [
    EosModel(EosKind.ID, 5.0 / 3.0),
    EosModel(EosKind.ID, 4.0 / 3.0),
    EosModel(EosKind.TM),
    EosModel(EosKind.IP),
    EosModel(EosKind.RC),
]


@pytest.fixture(params=ALL_EOS, ids=lambda m: f"{m.kind.value}{m.gamma:.2f}" if m.kind is EosKind.ID else m.kind.value)
def any_eos(request):
    return request.param


def random_primitives(rng, n, rho_range=(1e-6, 1e3), p_range=(1e-6, 1e3),
                      vmax=1.0 - 1e-6, dim=1, log_uniform=False):
    """Random primitive samples; returns (rho, [v components], p) arrays."""
    if log_uniform:
        rho = np.exp(rng.uniform(np.log(rho_range[0]), np.log(rho_range[1]), n))
        p = np.exp(rng.uniform(np.log(p_range[0]), np.log(p_range[1]), n))
    else:
        rho = rng.uniform(*rho_range, n)
        p = rng.uniform(*p_range, n)
    speed = rng.uniform(0.0, vmax, n)
    if dim == 1:
        vs = [speed * rng.choice([-1.0, 1.0], n)]
    else:
        ang = rng.uniform(0.0, 2.0 * np.pi, n)
        vs = [speed * np.cos(ang), speed * np.sin(ang)]
    return rho, vs, p


def random_conserved(rng, eos, n, dim=1, **kwargs):
    """Random admissible conserved samples as component arrays."""
    rho, vs, p = random_primitives(rng, n, dim=dim, **kwargs)
    dens, moms, energy = eos_mod.prim_to_cons_arrays(eos, rho, vs, p)
    return dens, moms, energy
