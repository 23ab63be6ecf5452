"""Uniform sampling of reachable sets by particle optimal transport.

The heavy lifting happens in the compiled ``_reachot`` extension. Config-driven
helpers accept either a dict (the JSON config schema) or a path to a JSON file.
"""

import json
import os

from ._reachot import (
    ConfigError,
    DivergenceError,
    Problem,
    interaction_energy,
    kernel,
    kernel_grad,
    rhs,
    systems,
    version,
    wasserstein1_1d,
)
from . import _reachot

__all__ = [
    "ConfigError",
    "DivergenceError",
    "Problem",
    "gradcheck",
    "interaction_energy",
    "kernel",
    "kernel_grad",
    "load_config",
    "optimize",
    "baseline",
    "rhs",
    "systems",
    "version",
    "wasserstein1_1d",
]


def _config_text(config):
    if isinstance(config, (str, os.PathLike)):
        with open(config, encoding="utf-8") as f:
            return f.read()
    return json.dumps(config)


def load_config(config):
    """Validated config with every default filled in."""
    return json.loads(_reachot._normalize_config(_config_text(config)))


def _run(config, command, threads):
    report, terminals, x0s, controls = _reachot._run(_config_text(config), command, threads)
    return {
        "report": json.loads(report),
        "terminals": terminals,
        "x0s": x0s,
        "controls": controls,
    }


def optimize(config, threads=1):
    """Runs the particle optimizer; returns the report and the ensemble arrays."""
    return _run(config, "optimize", threads)


def baseline(config, threads=1):
    """Random-control Monte Carlo baseline with the same outputs as optimize."""
    return _run(config, "baseline", threads)


def gradcheck(config, probes=50):
    """Adjoint gradient versus central differences on random coordinates."""
    return json.loads(_reachot._gradcheck(_config_text(config), probes))
