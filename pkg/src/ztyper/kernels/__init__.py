"""LSTM kernel backend selection.

The compiled Cython kernels are preferred when the extension built; the
numpy kernels are the always-available fallback. ``ZTYPER_BACKEND=python``
or ``ZTYPER_BACKEND=cython`` forces a backend (the latter raises if the
extension is missing). Both backends implement the identical contract, see
``lstm_py``.
"""

import os

from . import lstm_py

_FORCED = os.environ.get("ZTYPER_BACKEND", "").strip().lower()

try:
    from . import _lstm_cy
except ImportError:
    _lstm_cy = None

if _FORCED == "python":
    _impl = lstm_py
elif _FORCED == "cython":
    if _lstm_cy is None:
        raise ImportError(
            "ZTYPER_BACKEND=cython but the compiled kernel is not available; "
            "reinstall with Cython and a C compiler"
        )
    _impl = _lstm_cy
elif _FORCED:
    raise ImportError(f"unknown ZTYPER_BACKEND {_FORCED!r} (use 'python' or 'cython')")
else:
    _impl = _lstm_cy if _lstm_cy is not None else lstm_py

lstm_forward = _impl.lstm_forward
lstm_backward = _impl.lstm_backward


def backend_name() -> str:
    return "cython" if _impl is _lstm_cy else "python"


def available_backends() -> tuple[str, ...]:
    return ("python", "cython") if _lstm_cy is not None else ("python",)
