import numpy as np
import pytest

from mpcfl import _kernels
from mpcfl.field import FieldParams

BACKENDS = [b for b in (_kernels.numpy_backend, _kernels.numba_backend) if b is not None]


@pytest.fixture
def f97():
    """GF(97) with a tiny fixed-point format, for hand-checkable examples."""
    return FieldParams(97, frac_bits=0, int_bits=1, max_terms=16)


@pytest.fixture(params=BACKENDS, ids=lambda b: b.name)
def kern(request):
    return request.param


@pytest.fixture(params=[False, True], ids=["default-backend", "numpy-backend"])
def either_backend(request, monkeypatch):
    """Run a test once with the selected backend and once with the numpy fallback."""
    if request.param:
        for name in ("addmod", "submod", "mulmod", "sum_rows", "matmul_mod"):
            monkeypatch.setattr(_kernels, name, getattr(_kernels.numpy_backend, name))
    return request.param


class ScriptedBits:
    """Stands in for a Generator: ``bit_generator.random_raw`` replays given words."""

    def __init__(self, words):
        self._words = list(words)
        self.bit_generator = self

    def random_raw(self, size):
        out, self._words = self._words[:size], self._words[size:]
        return np.array(out, dtype=np.uint64)
