"""Full pipeline run against the live server vs the in-process stub.

The submission files must match byte for byte: the serving layer may add
transport, never behavior. Uses the pipeline package's five-claim offline
fixture and its public batch runner.
"""

import sys
import threading
import time
from pathlib import Path

import pytest
import uvicorn

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "tests"))

from conftest import record_acceptance
from e2e_fixture import build_e2e_fixture  # noqa: E402

from veristack.backend import HttpBackend, StubBackend
from veristack.core import PipelineConfig
from veristack.orchestrator.io import (
    load_claim_stores,
    load_claims,
    load_exemplars,
    write_submission,
)
from veristack.orchestrator.pipeline import run_batch

from veristack_backend import build_app


@pytest.fixture(scope="module")
def live_server():
    server = uvicorn.Server(
        uvicorn.Config(build_app("stub"), host="127.0.0.1", port=0, log_level="warning")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10.0
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("sidecar did not start within 10s")
        time.sleep(0.02)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5.0)


def _run_and_write(paths, backend, out_path):
    claims = load_claims(paths["claims"])
    exemplars = load_exemplars(paths["train"])
    results = run_batch(
        claims,
        lambda c: load_claim_stores(paths["stores"], c.id),
        PipelineConfig(),
        backend,
        workers=1,
        exemplars=exemplars,
    )
    assert all(not r.failed for r in results), [r.error for r in results if r.failed]
    write_submission(results, out_path)
    return out_path.read_bytes()


def test_health_over_the_wire(live_server):
    assert HttpBackend(live_server).health() == {"status": "ok", "mode": "stub"}


def test_live_run_matches_in_process_run(tmp_path, live_server):
    ok = False
    try:
        paths = build_e2e_fixture(tmp_path / "data")
        local = _run_and_write(paths, StubBackend(), tmp_path / "local.jsonl")
        wired = _run_and_write(paths, HttpBackend(live_server), tmp_path / "wire.jsonl")
        assert local == wired
        assert local.count(b"\n") == 5
        assert not (tmp_path / "wire.errors.log").exists()
        ok = True
    finally:
        record_acceptance("live sidecar pipeline run byte-identical to in-process stub run", ok)
