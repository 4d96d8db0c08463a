import json
import os
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("pkg", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("pkg")

# K_5 parameter with itinerary 0 followed by zeros (midpoint of a 512-bit search)
C_ZERO = "-1.99527159431"

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def run_cli(args: list[str], out: Path) -> tuple[int, bytes]:
    proc = subprocess.run([sys.executable, "-m", "quadthermo.cli", *args, "--out", str(out)],
                          capture_output=True, env={**os.environ, "PYTHONHASHSEED": "0"})
    data = out.read_bytes() if out.exists() else b""
    return proc.returncode, data


@pytest.fixture(scope="session")
def cli_runs(tmp_path_factory):
    """CLI outputs cached per (config name, threads); shared by the A1, A5 and A9 checks."""
    base = tmp_path_factory.mktemp("cli")
    cache: dict = {}

    def get(name: str, args: list[str], threads: int):
        key = (name, threads)
        if key not in cache:
            import time
            t0 = time.perf_counter()
            code, data = run_cli([*args, "--threads", str(threads)], base / f"{name}-{threads}.out")
            cache[key] = (code, data, time.perf_counter() - t0)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def toy_parameters():
    """find_parameter results for prefixes '0' and '1' at n=5, 512 bits."""
    from quadthermo.search import KneadingTarget, find_parameter
    return {p: find_parameter(KneadingTarget(5, p), 512) for p in ("0", "1")}


def load_json(data: bytes) -> dict:
    return json.loads(data.decode("utf-8"))
