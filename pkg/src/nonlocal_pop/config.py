"""Scenario configuration, presets and their (de)serialization.

A configuration file may leave ``grid.n``/``grid.dx`` and ``scheme.dt`` out;
:func:`ScenarioConfig.from_dict` fills them with the documented defaults so
the resolved configuration (and the run manifest) is always explicit.
"""
from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .dispersion import ModelParams
from .errors import ConfigurationError
from .kernel import Kernel
from .solver import (
    PERIODIC,
    SPECTRAL,
    Grid,
    InitialCondition,
    SchemeConfig,
    default_dt,
    default_dx,
)

OUTPUT_ENV = "NONLOCAL_POP_OUTPUT"
DIAGNOSTICS = ("pattern", "splitting", "spectrum", "front", "drift")


@dataclass(frozen=True)
class DiagnosticsConfig:
    requested: tuple = ("pattern", "splitting", "spectrum")
    front_direction: str = "rightward"
    front_level: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "requested", tuple(self.requested))
        bad = set(self.requested) - set(DIAGNOSTICS)
        if bad:
            raise ConfigurationError(f"unknown diagnostics {sorted(bad)}")

    def to_dict(self):
        return {"requested": list(self.requested), "front_direction": self.front_direction,
                "front_level": self.front_level}

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    params: ModelParams
    kernel: Kernel
    grid: Grid
    scheme: SchemeConfig
    initial: InitialCondition
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    seed: int = 0
    output_dir: str | None = None
    description: str = ""

    def __post_init__(self):
        if self.initial.seed != self.seed:
            object.__setattr__(self, "initial", replace(self.initial, seed=self.seed))

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "params": self.params.to_dict(),
            "kernel": self.kernel.to_dict(),
            "grid": {**self.grid.to_dict(), "dx": self.grid.dx},
            "scheme": self.scheme.to_dict(),
            "initial": self.initial.to_dict(),
            "diagnostics": self.diagnostics.to_dict(),
            "seed": self.seed,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioConfig":
        try:
            params = ModelParams.from_dict(data["params"])
            kernel = Kernel.from_dict(data["kernel"])
            g = dict(data["grid"])
            bc = g.get("bc", PERIODIC)
            if "n" in g:
                grid = Grid(g["L"], g["n"], bc)
            else:
                grid = Grid.from_spacing(g["L"], g.get("dx") or default_dx(kernel), bc)
            s = dict(data["scheme"])
            if s.get("dt") is None:
                s["dt"] = default_dt(grid.dx, params.d)
            scheme = SchemeConfig(**s)
            seed = int(data.get("seed", 0))
            init = dict(data.get("initial", {}))
            init["seed"] = seed
            initial = InitialCondition.from_dict(init)
            diagnostics = DiagnosticsConfig.from_dict(data.get("diagnostics", {}))
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed scenario configuration: {exc}") from exc
        return cls(data.get("name", "custom"), params, kernel, grid, scheme, initial,
                   diagnostics, seed, data.get("output_dir"), data.get("description", ""))

    def with_overrides(self, **overrides) -> "ScenarioConfig":
        """Re-resolve after replacing dotted keys, e.g. ``{"params.d": 0.12}``.

        Changing a quantity that feeds a default (d, kernel width, dx) drops
        the previously resolved dt/n unless those are overridden too.
        """
        data = self.to_dict()
        touched_grid = any(k.startswith(("kernel.", "grid.")) for k in overrides)
        touched_dt = touched_grid or "params.d" in overrides
        if touched_grid and "grid.n" not in overrides:
            data["grid"].pop("n")
            if "grid.dx" not in overrides:
                data["grid"].pop("dx")
        if touched_dt and "scheme.dt" not in overrides:
            data["scheme"]["dt"] = None
        for key, value in overrides.items():
            node = data
            *path, leaf = key.split(".")
            for part in path:
                node = node.setdefault(part, {})
            node[leaf] = value
        return ScenarioConfig.from_dict(data)

    def resolve_output_dir(self) -> Path:
        if self.output_dir:
            return Path(self.output_dir)
        return Path(os.environ.get(OUTPUT_ENV, "runs")) / self.name

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _raw(name, description, d, kernel, L, t_end, snapshot_every, initial, diagnostics,
         a=2.0, b=1.0):
    return {
        "name": name,
        "description": description,
        "params": {"d": d, "a": a, "b": b},
        "kernel": kernel,
        "grid": {"L": L, "bc": PERIODIC},
        "scheme": {"t_end": t_end, "snapshot_every": snapshot_every,
                   "convolution_mode": SPECTRAL, "safety": 0.9},
        "initial": initial,
        "diagnostics": diagnostics,
        "seed": 0,
    }


_BOX3 = {"shape": "box_symmetric", "width": 3.0, "normalized": True}
_PATTERN_DIAG = {"requested": ["pattern", "splitting", "spectrum"]}
_NOISE = {"kind": "perturbed_equilibrium", "amplitude": 1e-3}

_RAW_PRESETS = {
    "fig1": _raw("fig1", "pattern emergence from the noisy equilibrium",
                 0.05, _BOX3, 10.0, 300.0, 1.0, _NOISE, _PATTERN_DIAG),
    "fig2": _raw("fig2", "a localized population splits into two",
                 0.05, _BOX3, 10.0, 300.0, 1.0,
                 {"kind": "plug", "width": 1.0}, _PATTERN_DIAG),
    "fig3": _raw("fig3", "two populations on a larger domain split repeatedly",
                 0.05, _BOX3, 40.0, 400.0, 2.0,
                 {"kind": "two_plugs", "width": 1.0, "centers": [40 / 3, 80 / 3]}, _PATTERN_DIAG),
    "fig4": _raw("fig4", "as fig3 with small diffusion: nearly disconnected sub-populations",
                 0.01, _BOX3, 40.0, 400.0, 2.0,
                 {"kind": "two_plugs", "width": 1.0, "centers": [40 / 3, 80 / 3]}, _PATTERN_DIAG),
    "fig5": _raw("fig5", "one-sided kernel, wider support: drifting maxima",
                 0.01, {"shape": "box_asymmetric", "width": 2.0, "normalized": True},
                 120.0, 150.0, 1.0, {"kind": "plug", "width": 1.0},
                 {"requested": ["front", "drift", "pattern"], "front_direction": "leftward"}),
    "fig6": _raw("fig6", "travelling front with a stable equilibrium behind it",
                 0.06, {"shape": "box_symmetric", "width": 1.5, "normalized": True},
                 160.0, 80.0, 0.5, {"kind": "plug", "width": 1.0},
                 {"requested": ["front"], "front_direction": "rightward"}),
    "fig7": _raw("fig7", "travelling front leaving a periodic wake (kernel twice as wide)",
                 0.06, _BOX3, 200.0, 80.0, 0.5, {"kind": "plug", "width": 1.0},
                 {"requested": ["front"], "front_direction": "rightward"}),
    "fig8": _raw("fig8", "one-sided kernel near the stability boundary: drifting pattern",
                 0.01, {"shape": "box_asymmetric", "width": 1.1, "normalized": True},
                 80.0, 100.0, 1.0, {"kind": "plug", "width": 1.0},
                 {"requested": ["front", "drift", "pattern"], "front_direction": "leftward"}),
}


def preset_names() -> list[str]:
    return list(_RAW_PRESETS)


def get_preset(name: str) -> ScenarioConfig:
    try:
        raw = _RAW_PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {preset_names()}") from None
    return ScenarioConfig.from_dict(copy.deepcopy(raw))
