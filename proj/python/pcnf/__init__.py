"""Lower bounds for physics-constrained network flow problems.

Networks are passed as dicts (or JSON strings) in the format read by the
``pcnf`` command-line tool. Reports come back as dicts.
"""

import json as _json

from . import _pcnf
from ._pcnf import CapacityError, InfeasibleError, InputError

__all__ = [
    "CapacityError",
    "InfeasibleError",
    "InputError",
    "export_lp",
    "load",
    "oracle",
    "solve",
    "solve_lp",
    "tighten",
    "validate",
]


def _text(network):
    return network if isinstance(network, str) else _json.dumps(network)


def load(path):
    """Read a network file into a dict."""
    with open(path, encoding="utf-8") as f:
        return _json.load(f)


def validate(network):
    """Invariant violations as (where, message) pairs; empty when valid."""
    return _pcnf.validate(_text(network))


def solve(network, t=8, refine_rounds=0, tighten=0, hierarchy="", solver="auto",
          refine="widest", oracle=False, seed=0):
    """Discretize, solve and refine; returns the report dict."""
    return _json.loads(_pcnf.solve(_text(network), t, refine_rounds, tighten, hierarchy,
                                   solver, refine, oracle, seed))


def export_lp(network, t=8, format="mps", hierarchy="", tighten=0):
    """The belief LP as MPS or LP text."""
    return _pcnf.export_lp(_text(network), t, format, hierarchy, tighten)


def oracle(network, t=8, mode="continuous"):
    """Brute-force reference value and point ("discretized" or "continuous")."""
    return _json.loads(_pcnf.oracle(_text(network), t, mode))


def tighten(network, sweeps=50, resolution=16, schedule="jacobi"):
    """Tightened per-variable bounds."""
    return _json.loads(_pcnf.tighten(_text(network), sweeps, resolution, schedule))


def solve_lp(A, b, c):
    """min c.x s.t. A x = b, x >= 0; returns (status, objective, x)."""
    return _pcnf.solve_lp(A, b, c)
