"""Backend selection for the hot numeric kernels.

Every kernel in :mod:`heliofor.kernels` exists in two forms: a numba
``@njit`` version and a pure numpy/scipy fallback. Which one runs is decided
by the ``HELIOFOR_JIT`` environment variable at import time (``0``, ``false``,
``off`` or ``no`` selects numpy) and can be overridden at runtime with
:func:`use_backend`.
"""

import contextlib
import os
import warnings

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_FALSEY = {"0", "false", "off", "no"}


def numba_available():
    return numba is not None


def _initial_backend():
    flag = os.environ.get("HELIOFOR_JIT", "1").strip().lower()
    if flag in _FALSEY:
        return "numpy"
    if not numba_available():  # pragma: no cover
        warnings.warn("numba not importable, falling back to numpy kernels")
        return "numpy"
    return "numba"


_backend = _initial_backend()


def get_backend():
    """Name of the active kernel backend, ``"numba"`` or ``"numpy"``."""
    return _backend


def set_backend(name):
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not numba_available():  # pragma: no cover
        raise RuntimeError("numba backend requested but numba is not installed")
    _backend = name


@contextlib.contextmanager
def use_backend(name):
    """Temporarily switch kernel backend (used by tests and the benchmark)."""
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


class Kernel:
    """A numeric kernel with a jitted and an interpreted implementation.

    ``jit_source`` is compiled lazily with ``numba.njit(cache=True)`` on first
    use under the numba backend; ``fallback`` runs under the numpy backend.
    When no separate fallback is given the same source is run uncompiled, which
    is only done for kernels written purely in terms of numpy array operations.
    """

    def __init__(self, jit_source, fallback=None):
        self.jit_source = jit_source
        self.fallback = fallback if fallback is not None else jit_source
        self._compiled = None
        self.__name__ = jit_source.__name__
        self.__doc__ = jit_source.__doc__

    @property
    def compiled(self):
        if self._compiled is None:
            self._compiled = numba.njit(cache=True)(self.jit_source)
        return self._compiled

    def impl(self, backend=None):
        backend = backend or _backend
        return self.compiled if backend == "numba" else self.fallback

    def __call__(self, *args):
        if _backend == "numba":
            return self.compiled(*args)
        return self.fallback(*args)

    def __repr__(self):
        return f"<Kernel {self.__name__} backend={_backend}>"


def kernel(fn=None, *, fallback=None):
    """Decorator registering ``fn`` as a :class:`Kernel`."""
    if fn is None:
        return lambda f: Kernel(f, fallback)
    return Kernel(fn, fallback)
