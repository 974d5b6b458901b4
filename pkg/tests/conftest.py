import csv
import json
import os

import pytest

from qxfer.cli import main


class RecipeRunner:
    """Runs bundled CLI recipes once per session and caches the output folder."""

    def __init__(self, root):
        self.root = root
        self.done = {}

    def __call__(self, command, recipe, *extra):
        key = (command, recipe, extra)
        if key not in self.done:
            out = os.path.join(self.root, f"{recipe}-{len(self.done)}")
            code = main([command, "--config", recipe, "--out", out, *extra])
            assert code == 0, f"{recipe} exited with {code}"
            self.done[key] = out
        return self.done[key]


@pytest.fixture(scope="session")
def recipe(tmp_path_factory):
    return RecipeRunner(str(tmp_path_factory.mktemp("recipes")))


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


_VERDICTS = {}


@pytest.fixture
def verdict():
    """Record one acceptance line: ``verdict(n, ok, detail)``."""

    def record(n, ok, detail):
        _VERDICTS[n] = (bool(ok), detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        ok, detail = _VERDICTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
