import shutil
from pathlib import Path

import pytest

from veristack.backend.stub import StubBackend, StubState
from veristack.core import PipelineConfig

from e2e_fixture import build_e2e_fixture


@pytest.fixture
def stub_backend() -> StubBackend:
    return StubBackend(StubState())


@pytest.fixture
def config() -> PipelineConfig:
    return PipelineConfig(backend_url="stub://local")


@pytest.fixture(scope="session")
def e2e_paths(tmp_path_factory) -> dict[str, Path]:
    root = tmp_path_factory.mktemp("e2e")
    return build_e2e_fixture(root)


@pytest.fixture
def e2e_copy(e2e_paths, tmp_path) -> dict[str, Path]:
    """A private mutable copy for tests that write next to the fixture."""
    dest = tmp_path / "e2e"
    shutil.copytree(e2e_paths["root"], dest)
    out = dict(e2e_paths)
    for key, path in e2e_paths.items():
        out[key] = dest / path.relative_to(e2e_paths["root"]) if key != "root" else dest
    return out


# Acceptance tests print one line per criterion so a failing run still
# shows which guarantees held. Collected here, emitted in the summary.
_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def record_acceptance(name: str, passed: bool) -> None:
    _ACCEPTANCE_RESULTS.append((name, "PASS" if passed else "FAIL"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, status in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{status}  {name}")
