import pytest

from zdmn import backend, networks

BACKENDS = ("numpy", "numba") if backend.HAS_NUMBA else ("numpy",)


@pytest.fixture(params=BACKENDS)
def both_backends(request, monkeypatch):
    """Run the decorated test once per kernel backend."""
    if request.param == "numpy":
        monkeypatch.setenv("ZDMN_NO_NUMBA", "1")
    else:
        monkeypatch.delenv("ZDMN_NO_NUMBA", raising=False)
    return request.param


@pytest.fixture(scope="session")
def bundled_specs():
    """Every bundled network at its default parameters."""
    return {name: networks.bundled_spec(name) for name in networks.BUNDLED}
