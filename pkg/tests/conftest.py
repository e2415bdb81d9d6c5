import os
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from tensopt.sim import instance_a, instance_b

FIXTURES = Path(__file__).parent / "fixtures"

GEMM_ASSETS = [
    "gemm_12544x64x256_unopt.gk",
    "gemm_12544x64x256_autocomp.gk",
    "gemm_12544x64x256_exo_opt.gk",
]
TINYMPC_ASSETS = [
    "tinympc_fwd_unopt.gk",
    "tinympc_fwd_autocomp.gk",
    "tinympc_fwd_hwfsm_ref.gk",
]
ALL_ASSETS = GEMM_ASSETS + TINYMPC_ASSETS


def asset_text(name: str) -> str:
    return (resources.files("tensopt.assets") / "kernels" / name).read_text()


def fixture_text(*parts: str) -> str:
    return (FIXTURES.joinpath(*parts)).read_text()


@pytest.fixture(scope="session")
def cfg_a():
    return instance_a()


@pytest.fixture(scope="session")
def cfg_b():
    return instance_b()


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(autouse=True)
def _no_ambient_backend(monkeypatch):
    # Tests pick the simulation backend explicitly where it matters; make
    # sure a leftover environment override can't skew the rest.
    monkeypatch.delenv("TENSOPT_SIM_BACKEND", raising=False)
    monkeypatch.delenv("TENSOPT_API_KEY", raising=False)
