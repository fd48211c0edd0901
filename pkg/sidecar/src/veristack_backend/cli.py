"""Command-line entry for the sidecar."""

from __future__ import annotations

import click
import uvicorn

from veristack.backend import StubState

from .app import build_app
from .real import load_default_registry


@click.group()
@click.version_option("0.1.0", prog_name="veristack-backend")
def main() -> None:
    """Model-backend sidecar speaking the v1 wire protocol."""


@main.command()
@click.option("--mode", type=click.Choice(["stub", "real"]), default="stub", show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8091, show_default=True)
@click.option("--seed", default=None, help="Stub determinism seed override.")
def serve(mode: str, host: str, port: int, seed: str | None) -> None:
    """Run the service until interrupted."""
    if mode == "real":
        app = build_app("real", registry=load_default_registry())
    else:
        state = StubState(seed=seed) if seed is not None else None
        app = build_app("stub", state=state)
    uvicorn.run(app, host=host, port=port, log_level="info")
