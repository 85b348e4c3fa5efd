"""Shared test setup.

Two session-level guarantees: no test opens a network connection unless
the live-smoke environment variable is set, and the acceptance tests run
after everything else so their wall-clock budget covers the whole suite.
"""

import os
import socket
import time

import pytest

LIVE_SMOKE_ENV = "LTLKIT_LIVE_SMOKE"


def live_smoke_enabled() -> bool:
    return os.environ.get(LIVE_SMOKE_ENV) == "1"


def pytest_configure(config):
    config._suite_started = time.monotonic()


def suite_elapsed(config) -> float:
    return time.monotonic() - config._suite_started


def pytest_collection_modifyitems(config, items):
    # Acceptance last: its offline/time criterion measures the full run.
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")


@pytest.fixture(autouse=True, scope="session")
def _no_network():
    """Refuse outbound connections for the whole session.

    The live smoke test opts out by setting LTLKIT_LIVE_SMOKE=1, which
    also tells the rest of the suite that networking is intentional.
    """
    if live_smoke_enabled():
        yield
        return
    real_connect = socket.socket.connect

    def guarded(self, address):
        raise RuntimeError(
            f"test attempted a network connection to {address!r}; "
            f"set {LIVE_SMOKE_ENV}=1 only for the live smoke test"
        )

    socket.socket.connect = guarded
    try:
        yield
    finally:
        socket.socket.connect = real_connect
