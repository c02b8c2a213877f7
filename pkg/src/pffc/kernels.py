"""Element kernel backend selection.

The compiled Cython core is used when it was built; otherwise the numpy
implementation is imported. Set ``PFFC_KERNELS=python`` to force the
fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("PFFC_KERNELS", "").lower() != "python":
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass

element_a = _impl.element_a
element_a_third = _impl.element_a_third


def get_backend(name: str):
    """Kernel module by name (``"python"`` or ``"cython"``), for comparisons."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
