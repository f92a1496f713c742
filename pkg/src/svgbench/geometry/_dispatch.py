"""Kernel implementation selection: compiled extension when importable,
pure-Python fallback otherwise. SVGBENCH_GEOMETRY_IMPL=python|compiled forces
one (compiled raises if the extension is unavailable)."""

import os


def _select():
    choice = os.environ.get("SVGBENCH_GEOMETRY_IMPL", "auto")
    if choice not in ("auto", "python", "compiled"):
        raise ValueError(f"unknown SVGBENCH_GEOMETRY_IMPL: {choice!r}")
    if choice in ("auto", "compiled"):
        try:
            from . import _kernels_cy

            return _kernels_cy
        except ImportError:
            if choice == "compiled":
                raise
    from . import _kernels_py

    return _kernels_py


kernels = _select()


def active_impl_name() -> str:
    return kernels.IMPL_NAME
