"""Imprimitivity bimodules over finite commutative C*-algebras.

Instances are plain dicts in the same JSON schema the ``morita`` command line
tool reads and ``gen_*`` writes.
"""

import json

try:
    from . import _morita as _core
except ImportError:
    import _morita as _core

PreconditionError = _core.PreconditionError
ParseError = _core.ParseError
NumericalError = _core.NumericalError
UsageError = _core.UsageError
DEFAULT_TOL = _core.default_tol


def _text(doc):
    return doc if isinstance(doc, str) else json.dumps(doc)


def gen_bimodule(n, spread=10.0, seed=42, present=False):
    return json.loads(_core.gen_bimodule(n, spread, seed, present))


def gen_category(objects, points, seed=42):
    return json.loads(_core.gen_category(objects, points, seed))


def imprimitivity(bimodule, tol=DEFAULT_TOL):
    return json.loads(_core.imprimitivity(_text(bimodule), tol))


def phi(bimodule, tol=DEFAULT_TOL, samples=20, seed=42):
    return json.loads(_core.phi(_text(bimodule), tol, samples, seed))


def reconstruct(bimodule, tol=DEFAULT_TOL, samples=20, seed=42):
    return json.loads(_core.reconstruct(_text(bimodule), tol, samples, seed))


def decompose(presented, tol=DEFAULT_TOL):
    return json.loads(_core.decompose(_text(presented), tol))


def run(command, *inputs, tol=DEFAULT_TOL, seed=42, samples=50, kept=()):
    """A command-line report as a dict, with the exit status under "status"."""
    return json.loads(_core.run(command, [_text(i) for i in inputs], tol, seed, samples, list(kept)))


def joint_diagonalize(generators, tol=DEFAULT_TOL):
    return _core.joint_diagonalize(list(generators), tol)


def digest(document):
    return _core.digest(_text(document))


__all__ = [
    "DEFAULT_TOL",
    "NumericalError",
    "ParseError",
    "PreconditionError",
    "UsageError",
    "decompose",
    "digest",
    "gen_bimodule",
    "gen_category",
    "imprimitivity",
    "joint_diagonalize",
    "phi",
    "reconstruct",
    "run",
]
