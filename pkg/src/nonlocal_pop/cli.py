"""Command-line front end.

Subcommands: ``simulate``, ``stability``, ``neutral-curve``, ``speed``,
``sweep`` and ``list-presets``.  Exit codes: 0 success, 2 invalid
configuration, 3 numerical blow-up, 4 I/O failure.  Failures print a JSON
object ``{"error", "message", "exit_code"}`` on stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ScenarioConfig, get_preset, preset_names
from .diagnostics import (
    LEFTWARD,
    default_peak_settings,
    drift_tracker,
    pattern_summary,
    power_spectrum,
    splitting_events,
    splitting_history,
    track_front,
    write_front_csv,
    write_peaks_csv,
    write_spectrum_csv,
    write_summary_json,
)
from .dispersion import (
    ModelParams,
    asymmetric_drift_speed,
    critical_mu,
    minimal_wave_speed,
    neutral_curve_rows,
    pattern_period,
    stability_verdict,
    write_neutral_curve_csv,
)
from .errors import BlowUpError, ConfigurationError, NonlocalPopError
from .kernel import Kernel, Shape
from .solver import NOISE_FRACTION, RunRecord, build_initial, simulate, write_snapshots_csv

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_IO = 0, 2, 3, 4
MAX_CSV_SNAPSHOTS = 200
MAX_CSV_POINTS = 2000


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    record: RunRecord
    summary: dict
    output_dir: Path | None


def _box_width(kernel: Kernel):
    return kernel.width if kernel.shape in (Shape.BOX_SYMMETRIC, Shape.BOX_ASYMMETRIC) else None


def summarize(config: ScenarioConfig, record: RunRecord, output_dir: Path | None = None) -> dict:
    """Compute the requested diagnostics; write their CSVs when ``output_dir`` is given."""
    diag = config.diagnostics
    params, kernel, grid = config.params, config.kernel, config.grid
    min_height, min_sep = default_peak_settings(params, kernel, grid)
    final = record.final
    summary: dict = {"t_final": float(record.times[-1]), "min_value": record.min_value,
                     "mass_initial": float(record.masses[0]), "mass_final": float(record.masses[-1])}
    width = _box_width(kernel)
    if width is not None:
        tau = pattern_period(width)
        summary["predicted_period"] = tau
        summary["predicted_xi"] = 2 * math.pi / tau

    if "pattern" in diag.requested:
        ps = pattern_summary(final, grid, min_height, min_sep)
        summary["pattern"] = {"peak_count": ps.peak_count,
                              "peak_positions": ps.peak_positions.tolist(),
                              "dominant_xi": ps.dominant_xi, "amplitude": ps.amplitude}
    if "splitting" in diag.requested:
        history = splitting_history(record, min_height, min_sep)
        summary["splitting"] = {"final_count": history[-1][1],
                                "events": splitting_events(history)}
        if output_dir:
            write_peaks_csv(history, output_dir / "peaks.csv")
    if "spectrum" in diag.requested and output_dir:
        write_spectrum_csv(*power_spectrum(final.c, grid), output_dir / "spectrum.csv")
    if "front" in diag.requested:
        trace = track_front(record, diag.front_level, diag.front_direction)
        predicted = minimal_wave_speed(params)
        summary["front"] = {"direction": diag.front_direction, "fitted_speed": trace.fitted_speed,
                            "fit_residual": trace.fit_residual, "predicted_speed": predicted,
                            "relative_error": abs(abs(trace.fitted_speed) - predicted) / predicted}
        if output_dir:
            write_front_csv(trace, output_dir / "front.csv")
    if "drift" in diag.requested:
        direction = diag.front_direction if diag.front_direction else LEFTWARD
        rep = drift_tracker(record, min_height, min_sep, direction=direction)
        out = {"drift_speed": rep.drift_speed, "wavenumber": rep.wavenumber,
               "spacings": rep.spacings.tolist(), "track_count": len(rep.tracks),
               "partial_tracks": sum(tr.partial for tr in rep.tracks)}
        if kernel.shape is Shape.BOX_ASYMMETRIC and rep.wavenumber > 0:
            out["relation_speed"] = asymmetric_drift_speed(rep.wavenumber, kernel.width)
        summary["drift"] = out
    return summary


def _noise_amplitude(config: ScenarioConfig):
    init = config.initial
    if init.kind != "perturbed_equilibrium":
        return None
    return NOISE_FRACTION * config.params.sigma if init.amplitude is None else init.amplitude


def execute_scenario(config: ScenarioConfig, write: bool = True) -> ScenarioResult:
    """Run one scenario; raises on failure."""
    out = config.resolve_output_dir() if write else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    initial = build_initial(config.initial, config.grid, config.params)
    record = simulate(initial, config.params, config.kernel, config.grid, config.scheme)
    summary = summarize(config, record, out)
    if out is not None:
        every = max(1, math.ceil(len(record) / MAX_CSV_SNAPSHOTS))
        stride = max(1, math.ceil(config.grid.n / MAX_CSV_POINTS))
        write_snapshots_csv(record, out / "snapshots.csv", every, stride)
        manifest = {
            "library_version": __version__,
            "seed": config.seed,
            "config": config.to_dict(),
            "effective": {"dx": config.grid.dx, "n": config.grid.n, "dt": config.scheme.dt,
                          "sigma": config.params.sigma,
                          "noise_amplitude": _noise_amplitude(config)},
            "snapshot_csv": {"every": every, "point_stride": stride},
        }
        with open(out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        write_summary_json(summary, out / "summary.json")
    return ScenarioResult(config, record, summary, out)


def _error_payload(exc: BaseException, code: int) -> dict:
    return {"error": type(exc).__name__, "message": str(exc), "exit_code": code}


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, BlowUpError):
        return EXIT_BLOWUP
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_CONFIG


def run_scenario(config: ScenarioConfig, stream=None) -> int:
    """Run a scenario and map failures to exit codes with a JSON error report."""
    stream = sys.stderr if stream is None else stream
    try:
        result = execute_scenario(config)
    except (NonlocalPopError, ValueError, OSError) as exc:
        code = _exit_code(exc)
        payload = _error_payload(exc, code)
        print(json.dumps(payload), file=stream)
        try:
            out = config.resolve_output_dir()
            if out.is_dir():
                (out / "error.json").write_text(json.dumps(payload) + "\n")
        except OSError:
            pass
        return code
    print(json.dumps({"output_dir": str(result.output_dir), **result.summary}, sort_keys=True))
    return EXIT_OK


def stability_report(params: ModelParams, kernel: Kernel, xi_max=None, n_samples=2000,
                     csv_path=None, stream=None) -> dict:
    stream = sys.stdout if stream is None else stream
    rep = stability_verdict(params, kernel, xi_max, n_samples)
    width = _box_width(kernel)
    info = {"verdict": "STABLE" if rep.stable else "UNSTABLE", "min_phi": rep.min_value,
            "min_xi": rep.min_xi, "predicted_period": None, "critical_d": None}
    if width is not None:
        info["predicted_period"] = pattern_period(width)
        info["critical_d"] = params.sigma * critical_mu(width).mu_critical
    elif not rep.stable and rep.min_xi > 0:
        info["predicted_period"] = 2 * math.pi / rep.min_xi
    print(info["verdict"], file=stream)
    print(f"min Phi = {rep.min_value:.6g} at xi = {rep.min_xi:.6g}", file=stream)
    if info["predicted_period"] is not None:
        print(f"predicted period tau = {info['predicted_period']:.6g}", file=stream)
    if info["critical_d"] is not None:
        print(f"critical diffusion d = {info['critical_d']:.6g}", file=stream)
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["xi", "phi"])
            for x, p in zip(rep.xi_samples, rep.phi_samples):
                w.writerow([format(float(x), ".12g"), format(float(p), ".12g")])
    return info


def neutral_curve(N_values, branches, output=None, stream=None):
    rows = neutral_curve_rows(N_values, branches)
    if output:
        write_neutral_curve_csv(rows, output)
    else:
        stream = sys.stdout if stream is None else stream
        print("N,j,z_j,mu_critical,tau", file=stream)
        for r in rows:
            print(f"{r.N!r},{r.branch_index},{r.z_j!r},{r.mu_critical!r},{r.tau!r}", file=stream)
    return rows


def speed_report(config: ScenarioConfig, write: bool = True) -> dict:
    """Measured front speed against ``2 sqrt(d sigma)``."""
    if "front" not in config.diagnostics.requested:
        config = ScenarioConfig.from_dict({**config.to_dict(), "diagnostics": {
            **config.diagnostics.to_dict(),
            "requested": list(config.diagnostics.requested) + ["front"]}})
    result = execute_scenario(config, write=write)
    front = result.summary["front"]
    return {"scenario": config.name, "measured_speed": abs(front["fitted_speed"]),
            "predicted_speed": front["predicted_speed"], "relative_error": front["relative_error"],
            "direction": front["direction"]}


def _run_one(config_dict):
    config = ScenarioConfig.from_dict(config_dict)
    try:
        result = execute_scenario(config)
        return {"name": config.name, "output_dir": str(result.output_dir), "exit_code": EXIT_OK,
                **result.summary}
    except (NonlocalPopError, ValueError, OSError) as exc:
        code = _exit_code(exc)
        return {"name": config.name, **_error_payload(exc, code)}


def sweep(base: ScenarioConfig, key: str, values, workers: int = 1, root=None) -> list[dict]:
    """Run ``base`` once per value of the dotted parameter ``key``."""
    root = Path(root) if root else base.resolve_output_dir()
    configs = []
    for v in values:
        cfg = base.with_overrides(**{key: v})
        label = f"{key.replace('.', '_')}={v:g}" if isinstance(v, float) else f"{key}={v}"
        cfg = ScenarioConfig.from_dict({**cfg.to_dict(), "name": f"{base.name}-{label}",
                                        "output_dir": str(root / label)})
        configs.append(cfg.to_dict())
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, configs))
    else:
        results = [_run_one(c) for c in configs]
    root.mkdir(parents=True, exist_ok=True)
    write_summary_json({"key": key, "values": list(values), "runs": results}, root / "sweep.json")
    return results


# -- argument parsing ---------------------------------------------------------

_OVERRIDE_FLAGS = {
    "d": "params.d", "a": "params.a", "b": "params.b",
    "width": "kernel.width", "decay": "kernel.decay",
    "L": "grid.L", "dx": "grid.dx", "n": "grid.n", "bc": "grid.bc",
    "dt": "scheme.dt", "t_end": "scheme.t_end", "snapshot_every": "scheme.snapshot_every",
    "mode": "scheme.convolution_mode", "seed": "seed", "output_dir": "output_dir",
}


def _add_scenario_args(p):
    p.add_argument("--preset", choices=preset_names())
    p.add_argument("--config", help="scenario or manifest JSON; flags override it")
    p.add_argument("--d", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--width", type=float, help="box kernel width N")
    p.add_argument("--decay", type=float, help="gaussian/exponential decay rate")
    p.add_argument("--L", type=float)
    p.add_argument("--dx", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--bc", choices=["periodic", "zero_flux"])
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--snapshot-every", dest="snapshot_every", type=float)
    p.add_argument("--mode", choices=["direct", "spectral"])
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir", dest="output_dir")


def _scenario_from_args(args) -> ScenarioConfig:
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        config = ScenarioConfig.from_dict(data.get("config", data))
    elif args.preset:
        config = get_preset(args.preset)
    else:
        raise ConfigurationError("give --preset or --config")
    overrides = {path: getattr(args, flag) for flag, path in _OVERRIDE_FLAGS.items()
                 if getattr(args, flag, None) is not None}
    return config.with_overrides(**overrides) if overrides else config


def _kernel_from_args(args) -> Kernel:
    shape = args.kernel
    if shape in ("box_symmetric", "box_asymmetric"):
        return Kernel(Shape(shape), width=args.width)
    if shape in ("gaussian", "exponential"):
        return Kernel(Shape(shape), decay=args.decay)
    return Kernel.delta()


def _parse_floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonlocal-pop", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a preset or configured scenario")
    _add_scenario_args(p)

    p = sub.add_parser("speed", help="measure the front speed of a wave scenario")
    _add_scenario_args(p)

    p = sub.add_parser("stability", help="dispersion scan of the homogeneous equilibrium")
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--a", type=float, default=2.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--kernel", default="box_symmetric",
                   choices=[s.value for s in Shape])
    p.add_argument("--width", type=float, default=3.0)
    p.add_argument("--decay", type=float, default=1.0)
    p.add_argument("--xi-max", dest="xi_max", type=float)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--csv", help="write Phi(xi) samples here")

    p = sub.add_parser("neutral-curve", help="tabulate critical mu_j(N)")
    p.add_argument("--N", dest="N_values", type=_parse_floats, default=None,
                   help="comma-separated N values")
    p.add_argument("--N-range", dest="N_range", type=_parse_floats, default=None,
                   help="start,stop,count")
    p.add_argument("--branches", type=lambda s: [int(v) for v in s.split(",")], default=[1])
    p.add_argument("--output")

    p = sub.add_parser("sweep", help="run a scenario for several values of one parameter")
    _add_scenario_args(p)
    p.add_argument("--param", required=True, help="dotted key, e.g. params.d")
    p.add_argument("--values", required=True, type=_parse_floats)
    p.add_argument("--workers", type=int, default=1)

    sub.add_parser("list-presets", help="show the built-in scenarios")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-presets":
            for name in preset_names():
                print(f"{name:6s} {get_preset(name).description}")
            return EXIT_OK
        if args.command == "stability":
            stability_report(ModelParams(args.d, args.a, args.b), _kernel_from_args(args),
                             args.xi_max, args.samples, args.csv)
            return EXIT_OK
        if args.command == "neutral-curve":
            if args.N_values:
                Ns = args.N_values
            elif args.N_range:
                start, stop, count = args.N_range
                Ns = np.linspace(start, stop, int(count)).tolist()
            else:
                Ns = [1.0, 2.0, 3.0]
            neutral_curve(Ns, args.branches, args.output)
            return EXIT_OK
        config = _scenario_from_args(args)
        if args.command == "simulate":
            return run_scenario(config)
        if args.command == "speed":
            print(json.dumps(speed_report(config), indent=2, sort_keys=True))
            return EXIT_OK
        if args.command == "sweep":
            results = sweep(config, args.param, args.values, args.workers)
            print(json.dumps(results, indent=2, sort_keys=True))
            return max((r.get("exit_code", 0) for r in results), default=0)
    except (NonlocalPopError, ValueError, OSError) as exc:
        code = _exit_code(exc)
        print(json.dumps(_error_payload(exc, code)), file=sys.stderr)
        return code
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
