"""Backend selection for the whole-program kernels.

The compiled extension is used when it imports; otherwise the pure-Python version.
Set ``TREECOMP_BACKEND=python`` to force the fallback.
"""
import importlib
import os

_MODULES = {"compiled": "treecomp._ckernels", "python": "treecomp._pykernels"}


def load_backend(name):
    return importlib.import_module(_MODULES[name])


def available_backends():
    out = []
    for name in _MODULES:
        try:
            load_backend(name)
        except ImportError:
            continue
        out.append(name)
    return out


def _select():
    wanted = os.environ.get("TREECOMP_BACKEND", "").strip().lower()
    if wanted:
        if wanted not in _MODULES:
            raise ImportError(f"TREECOMP_BACKEND={wanted!r}; expected one of {sorted(_MODULES)}")
        return load_backend(wanted)
    try:
        return load_backend("compiled")
    except ImportError:
        return load_backend("python")


_impl = _select()
BACKEND = _impl.BACKEND
forward = _impl.forward
backward = _impl.backward
