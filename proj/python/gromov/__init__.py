"""Python access to the gromov experiment runner and a few geometry helpers."""

import json
import os
from pathlib import Path

from ._gromov import (
    GromovError,
    bim_embed,
    convert,
    distance,
    experiment_kinds,
    free_product_exponent,
)
from . import _gromov

__all__ = [
    "GromovError",
    "Result",
    "bim_embed",
    "convert",
    "distance",
    "experiment_kinds",
    "free_product_exponent",
    "list_experiments",
    "run",
    "run_file",
]


class Result:
    def __init__(self, raw):
        self.report = json.loads(raw["report"])
        self.tables = dict(raw["tables"])
        self.passed = bool(raw["pass"])

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(self.report, indent=2) + "\n")
        for name, text in self.tables.items():
            (out / name).write_text(text)


def run(config, seed=None, jobs=1):
    """Run a config given as a dict."""
    return Result(_gromov.run_experiment(json.dumps(config), seed, jobs))


def run_file(path, seed=None, jobs=1):
    path = Path(path)
    config = json.loads(path.read_text())
    config.setdefault("name", path.stem)
    return run(config, seed, jobs)


def list_experiments(configs_dir=None, filter=""):
    configs_dir = configs_dir or os.environ.get("WORKBENCH_CONFIG_DIR", "configs")
    return _gromov.list_experiments(str(configs_dir), filter)
