"""Step-kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
bit-identical, just slower. Selection happens once at import and can be
forced with the MULTIFAR_BACKEND environment variable (auto, compiled,
python).
"""

from __future__ import annotations

import os

from ..errors import ConfigError


def _load():
    choice = os.environ.get("MULTIFAR_BACKEND", "auto")
    if choice not in ("auto", "compiled", "python"):
        raise ConfigError(
            f"MULTIFAR_BACKEND must be auto, compiled or python, got {choice!r}"
        )
    if choice in ("auto", "compiled"):
        try:
            from . import _kernel

            return _kernel, "compiled"
        except ImportError:
            if choice == "compiled":
                raise ConfigError(
                    "MULTIFAR_BACKEND=compiled but the compiled kernel is not "
                    "importable; build the extension or use the python backend"
                ) from None
    from . import _kernel_py

    return _kernel_py, "python"


_KERNEL_MODULE, BACKEND = _load()
run_trials = _KERNEL_MODULE.run_trials
