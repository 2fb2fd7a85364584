"""Pick the compiled kernels when they were built, else the numpy fallback."""

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

impl = _compiled if _compiled is not None else _fallback


def name():
    return "compiled" if impl is _compiled else "python"


def available():
    return ["compiled", "python"] if _compiled is not None else ["python"]


def use(backend):
    """Switch backend for the whole process ("compiled" or "python")."""
    global impl
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; run `pip install -e .`")
        impl = _compiled
    elif backend == "python":
        impl = _fallback
    else:
        raise ValueError(f"unknown backend {backend!r}")
