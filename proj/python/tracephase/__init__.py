"""Trace phases of polynomials over number fields.

Field structure, phase evaluation, oscillatory integrals, and the experiment
runner, backed by the C++ core.
"""

import json as _json

try:
    from ._core import Error, Field, Phase, __version__, integrate, run_json
except ImportError:  # in-build test layout keeps the extension on sys.path
    from _core import Error, Field, Phase, __version__, integrate, run_json


def run(config):
    """Run one experiment from a config mapping.

    Returns a dict with keys "summary", "csv", "manifest", "artifacts".
    """
    return _json.loads(run_json(_json.dumps(config)))


__all__ = ["Error", "Field", "Phase", "integrate", "run", "run_json", "__version__"]
