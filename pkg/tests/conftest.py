import time

import pytest

from setguard import cstr, pipeline, sysid
from setguard.safety import PlantGuard
from setguard.sets import _sample_polytope

_ACCEPTANCE_RESULTS: dict = {}


def record_acceptance(num: int, description: str, ok: bool):
    _ACCEPTANCE_RESULTS[num] = (description, ok)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE_RESULTS):
        desc, ok = _ACCEPTANCE_RESULTS[num]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}: {status} - {desc}")


class CstrAssets:
    """Shared case-study artifacts: data bank, model set, bundle, guard."""

    def __init__(self):
        self.bank = cstr.collect_bank()
        self.scenario = cstr.scenario()
        t0 = time.monotonic()
        self.bundle = pipeline.synthesize_bundle(
            self.bank, self.scenario, cstr.EQUILIBRIUM_SEEDS,
            build_aux=True, seed=0)
        self.synth_seconds = time.monotonic() - t0
        self.vertices = sysid.vertex_matrices(self.bundle.M)
        self.guard = PlantGuard(self.bundle.M, self.bundle.W,
                                self.scenario.plant.U, self.scenario.X_eta,
                                self.bundle.cells, self.bundle.families)

    @staticmethod
    def sample_polytope(poly, n, seed=0):
        return _sample_polytope(poly, n, seed)

    def simulate(self, seed, mode="proposed"):
        return pipeline.simulate(self.scenario, self.bundle, seed=seed, mode=mode)


@pytest.fixture(scope="session")
def cstr_assets():
    return CstrAssets()
