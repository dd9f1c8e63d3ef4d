"""Scaling-law workbench for weather models: FLOP and parameter accounting,
forecast metrics, scaling fits and run logs.

Report functions return the same document the ``wxscale --json`` command
prints, as a dict.
"""

import json
import os
from pathlib import Path

_packaged_data = Path(__file__).with_name("data")
if _packaged_data.is_dir():
    os.environ.setdefault("WXSCALE_DATA_DIR", str(_packaged_data))

from . import _core  # noqa: E402
from ._core import (  # noqa: E402
    InsufficientDataError,
    ValidationError,
    crps,
    default_registry_path,
    fit_power_law,
    format_millions,
    param_count_graphcast,
)

__version__ = _core.__version__


def _shape(arch, width, depth, **extra):
    shape = {"arch": arch, "width": width, "depth": depth}
    shape.update({k: v for k, v in extra.items() if v is not None})
    return json.dumps(shape)


def params(arch=None, width=None, depth=None, *, heads=None, registry=None):
    """Parameter count of one shape, or the whole registry when arch is None."""
    shape = None if arch is None else _shape(arch, width, depth, heads=heads)
    return json.loads(_core.params(shape, registry))


def flops(arch, width, depth, *, config=None, samples=None, heads=None, mlp_ratio=None, window=None):
    """FLOP breakdown; ``config`` overrides fields of the bundled defaults."""
    shape = _shape(arch, width, depth, heads=heads, mlp_ratio=mlp_ratio, window=window)
    return json.loads(_core.flops(shape, json.dumps(config or {}), samples))


def fit(runlog, mode="power-D", **options):
    return json.loads(_core.fit(str(runlog), mode, **options))


def metrics(pred, truth, *, config=None, members=(), fair=False, threads=1):
    return json.loads(_core.metrics(pred, truth, config, list(members), fair, threads))


def utilization(*, preset=None, achieved_tflops=None, peak_tflops=None, precision_bits=32):
    return json.loads(_core.utilization(preset, achieved_tflops, peak_tflops, precision_bits))
