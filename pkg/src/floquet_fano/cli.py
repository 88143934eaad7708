"""Command-line front end: validate, pole, evolve, sweep, repro."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__, presets
from .analysis import (
    SweepAxis,
    compare_pole_vs_time,
    fit_decay,
    sweep,
    write_sweep_csv,
)
from .dispersion import DispersionVariant, converge_truncation, find_pole
from .errors import ConfigError, NoConvergenceError, NonFiniteStateError
from .evolution import (
    EvolutionConfig,
    evolve,
    series_metadata,
    write_series_csv,
)
from .model import ModelConfig, classify_levels, parse_config_file, replica_band
from .selfenergy import FloquetTruncation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3
EXIT_NON_FINITE = 4
EXIT_REPRO_FAIL = 5

_VARIANTS = {v.value: v for v in DispersionVariant}


def _fmt(x: float) -> str:
    return f"{x:.12e}"


class Manifest:
    """Run record listing every emitted file; written even on failure."""

    def __init__(self, subcommand: str, out_dir: str, config_snapshot: dict,
                 preset: str | None = None):
        self.data = {
            "subcommand": subcommand,
            "config": config_snapshot,
            "outputs": [],
            "wall_clock_s": None,
            "code_version": __version__,
            "truncation": None,
            "preset": preset,
        }
        self.out_dir = out_dir
        self._start = time.monotonic()

    def add(self, path: str) -> str:
        self.data["outputs"].append(os.path.basename(path))
        return path

    def write(self) -> None:
        self.data["wall_clock_s"] = round(time.monotonic() - self._start, 3)
        os.makedirs(self.out_dir, exist_ok=True)
        path = os.path.join(self.out_dir, "manifest.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _config_snapshot(config: ModelConfig) -> dict:
    return {
        "e0": config.e0, "beta": config.beta, "eA": config.eA, "eB": config.eB,
        "gA": config.gA, "gB": config.gB, "omega": config.omega,
        "alpha": config.alpha, "chi": config.chi,
    }


def _load_config(args) -> tuple[ModelConfig, dict, dict]:
    return parse_config_file(args.config)


def pole_json(config: ModelConfig, pole) -> dict:
    return {
        "omega": config.omega,
        "chi": config.chi,
        "variant": pole.variant.value,
        "N": pole.truncation.N,
        "Nnu": pole.truncation.Nnu,
        "re_z": pole.z.real,
        "gamma": pole.gamma,
        "residual": pole.residual,
        "iterations": pole.iterations,
        "sheetmap": pole.sheetmap_record(),
    }


def cmd_validate(args) -> int:
    try:
        config, _evo, _solver = _load_config(args)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"chi = {config.chi:.6f}")
    print(f"period T = {config.period:.6f}")
    print(f"static band = [{config.band[0]:g}, {config.band[1]:g}]")
    n_max = 2
    for n in range(-n_max, n_max + 1):
        band = replica_band(config, n)
        print(f"replica n={n:+d}: [{band.lower:.4f}, {band.upper:.4f}]")
    for name, report in classify_levels(config, n_max).items():
        if report.in_any_replica:
            channels = ", ".join(f"n={n}" for n in report.inside)
            print(f"level {name} (e={report.energy:g}): inside replica(s) "
                  f"{channels}; nearest edge distance {report.edge_distance:.6g}")
        else:
            print(f"level {name} (e={report.energy:g}): outside all replicas "
                  f"|n|<={n_max}; nearest: n={report.nearest_n} edge, "
                  f"distance {report.edge_distance:.6g}")
    if config.weak_coupling_advisory:
        print("advisory: couplings exceed the weak-coupling regime g/beta <= 0.2")
    return EXIT_OK


def cmd_pole(args) -> int:
    try:
        config, _evo, solver = _load_config(args)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    variant = _VARIANTS[args.variant or solver.get("variant", "ScalarB0Exact")]
    tol = float(solver.get("tol", 1e-12))
    guard = float(solver.get("guard", 1e-10))
    max_iter = int(solver.get("max_iter", 200))
    seed = None
    seed_re = args.seed_re if args.seed_re is not None else solver.get("seed_re")
    seed_im = args.seed_im if args.seed_im is not None else solver.get("seed_im")
    if seed_re is not None or seed_im is not None:
        seed = complex(float(seed_re or 0.0), float(seed_im or 0.0))

    try:
        if "N" in solver:
            trunc = FloquetTruncation.auto(int(solver["N"]), config.chi)
            pole = find_pole(variant, seed, config, trunc, tol=tol,
                             max_iter=max_iter, guard=guard)
        else:
            trunc, pole = converge_truncation(variant, config, seed=seed,
                                              pole_tol=tol, guard=guard)
    except NoConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        for z, res in exc.trace:
            print(f"  z={z} |eta|={res:.3e}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE

    record = pole_json(config, pole)
    if pole.gamma < presets.GAMMA_B_ZERO_THRESHOLD:
        record["note"] = "pole purely real within resolution"
    text = json.dumps(record, indent=2, sort_keys=True)
    if not args.quiet:
        print(text)
    if args.out:
        manifest = Manifest("pole", args.out, _config_snapshot(config))
        manifest.data["truncation"] = {"N": pole.truncation.N, "Nnu": pole.truncation.Nnu}
        try:
            path = manifest.add(os.path.join(args.out, "pole.json"))
            os.makedirs(args.out, exist_ok=True)
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        finally:
            manifest.write()
    return EXIT_OK


def _evolution_config(evo_keys: dict, preset: str | None, initial: str | None) -> EvolutionConfig:
    name = preset or evo_keys.get("preset", "desk")
    overrides = {}
    for key, attr, cast in (("M", "M", int), ("w", "w", int),
                            ("gamma0", "gamma0", float), ("p", "cap_exponent", float),
                            ("dt", "dt", float), ("t_max", "t_max", float),
                            ("stride", "sample_stride", int)):
        if key in evo_keys:
            overrides[attr] = cast(evo_keys[key])
    chosen_initial = initial or evo_keys.get("initial", "B")
    builder = EvolutionConfig.paper if name == "paper" else EvolutionConfig.desk
    return builder(initial=chosen_initial, **overrides)


def cmd_evolve(args) -> int:
    try:
        config, evo_keys, _solver = _load_config(args)
        evo = _evolution_config(evo_keys, args.preset, args.initial)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = args.out or "."
    manifest = Manifest("evolve", out_dir, _config_snapshot(config),
                        preset=args.preset or "desk")
    try:
        series = evolve(config, evo)
    except NonFiniteStateError as exc:
        print(f"non-finite state: {exc}", file=sys.stderr)
        manifest.write()
        return EXIT_NON_FINITE

    os.makedirs(out_dir, exist_ok=True)
    stem = f"survival_{evo.initial}"
    csv_path = manifest.add(os.path.join(out_dir, stem + ".csv"))
    write_series_csv(series, csv_path)
    meta_path = manifest.add(os.path.join(out_dir, stem + ".json"))
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(series_metadata(series, __version__), fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest.write()
    if not args.quiet:
        print(f"P_{evo.initial}(t_max) = {series.p_survival[-1]:.6e}")
    return EXIT_OK


def _parse_grid(spec: str) -> list[float]:
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid spec must be start:stop:step, got {spec!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError("grid step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(count)]
    return [float(v) for v in spec.split(",") if v.strip()]


def cmd_sweep(args) -> int:
    try:
        config, evo_keys, solver = _load_config(args)
        grid = _parse_grid(args.grid)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    axis = SweepAxis.OMEGA if args.axis == "omega" else SweepAxis.CHI
    variant = _VARIANTS[args.variant or solver.get("variant", "ScalarB0Exact")]
    evo = _evolution_config(evo_keys, args.preset, None) if args.with_evolution else None

    out_dir = args.out or "."
    manifest = Manifest("sweep", out_dir, _config_snapshot(config),
                        preset=args.preset)
    try:
        rows = sweep(axis, grid, config, variant=variant,
                     with_evolution=args.with_evolution, evo=evo, jobs=args.jobs)
        os.makedirs(out_dir, exist_ok=True)
        csv_path = manifest.add(os.path.join(out_dir, "sweep.csv"))
        write_sweep_csv(rows, csv_path)
    finally:
        manifest.write()

    ok = sum(1 for r in rows if r.status == "ok")
    if not args.quiet:
        for row in rows:
            gamma = _fmt(row.gamma_pole) if row.gamma_pole is not None else "-"
            print(f"{args.axis}={row.omega if axis is SweepAxis.OMEGA else row.chi:.6f} "
                  f"gamma_pole={gamma} status={row.status}")
    return EXIT_OK if ok >= 1 else EXIT_NO_CONVERGENCE


def _check(name: str, passed: bool, detail: str, lines: list[str]) -> bool:
    lines.append(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    return passed


def cmd_repro(args) -> int:
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    preset_name = args.preset or "desk"
    builder = EvolutionConfig.paper if preset_name == "paper" else EvolutionConfig.desk
    lines: list[str] = []
    all_ok = True

    if args.figure == "table-gammaB":
        config = presets.fig3_config()
        manifest = Manifest("repro", out_dir, _config_snapshot(config), preset=preset_name)
        try:
            rows = sweep(SweepAxis.OMEGA, sorted(presets.GAMMA_B_TABLE), config,
                         jobs=args.jobs)
            csv_path = manifest.add(os.path.join(out_dir, "table_gammaB.csv"))
            write_sweep_csv(rows, csv_path)
            for row in rows:
                expected = presets.GAMMA_B_TABLE[round(row.omega, 4)]
                if expected == 0.0:
                    ok = (row.gamma_pole is not None
                          and row.gamma_pole < presets.GAMMA_B_ZERO_THRESHOLD)
                    detail = (f"omega={row.omega:.4f} gamma={row.gamma_pole:.3e} "
                              f"(expect < {presets.GAMMA_B_ZERO_THRESHOLD:g})")
                else:
                    ok = (row.gamma_pole is not None
                          and abs(row.gamma_pole / expected - 1.0) < 0.02)
                    detail = (f"omega={row.omega:.4f} gamma={row.gamma_pole:.6e} "
                              f"vs {expected:.4e} (2%)")
                all_ok &= _check("gammaB", ok, detail, lines)
        finally:
            manifest.write()

    elif args.figure == "fig3":
        config = presets.fig3_config()
        manifest = Manifest("repro", out_dir, _config_snapshot(config), preset=preset_name)
        try:
            _trunc, pole = converge_truncation(DispersionVariant.SCALAR_B0_EXACT, config)
            series = evolve(config, builder(initial="B"))
            csv_path = manifest.add(os.path.join(out_dir, "fig3_PB.csv"))
            with open(csv_path, "w", encoding="utf-8", newline="") as fh:
                fh.write("t,p_survival,envelope,norm\r\n")
                env = series.p_survival[0] * np.exp(-2.0 * pole.gamma * series.times)
                for t, p, e, nrm in zip(series.times, series.p_survival, env, series.norm):
                    fh.write(f"{t:.12e},{p:.12e},{e:.12e},{nrm:.12e}\r\n")
            comparison = compare_pole_vs_time(pole, series, window=(2000.0, series.times[-1]))
            ok = (comparison.rate_discrepancy is not None
                  and comparison.rate_discrepancy < 0.05
                  and comparison.fit.r_squared > 0.999)
            all_ok &= _check(
                "fig3", ok,
                f"gamma_fit={comparison.fit.gamma_fit:.4e} vs "
                f"gamma_pole={pole.gamma:.4e} "
                f"(discrepancy={comparison.rate_discrepancy:.2%}, "
                f"R2={comparison.fit.r_squared:.5f})", lines)
        finally:
            manifest.write()

    elif args.figure == "fig4a":
        config = presets.fig4a_config()
        manifest = Manifest("repro", out_dir, _config_snapshot(config), preset=preset_name)
        try:
            for initial in ("A", "B"):
                series = evolve(config, builder(initial=initial))
                csv_path = manifest.add(os.path.join(out_dir, f"fig4a_P{initial}.csv"))
                write_series_csv(series, csv_path)
                if initial == "A":
                    ok = series.p_survival[-1] >= 0.90
                    all_ok &= _check("fig4a PA", ok,
                                     f"P_A(t_max)={series.p_survival[-1]:.4f} (>= 0.90)",
                                     lines)
                else:
                    ok = 0.30 <= series.p_survival[-1] <= 0.40
                    all_ok &= _check("fig4a PB", ok,
                                     f"P_B(t_max)={series.p_survival[-1]:.4f} (in [0.30, 0.40])",
                                     lines)
        finally:
            manifest.write()

    elif args.figure == "fig4b":
        config = presets.fig4b_config()
        manifest = Manifest("repro", out_dir, _config_snapshot(config), preset=preset_name)
        try:
            for initial in ("A", "B"):
                series = evolve(config, builder(initial=initial))
                csv_path = manifest.add(os.path.join(out_dir, f"fig4b_P{initial}.csv"))
                write_series_csv(series, csv_path)
                if initial == "A":
                    p2000 = series.at_time(2000.0)
                    ok = p2000 < 0.05
                    all_ok &= _check("fig4b PA", ok,
                                     f"P_A(2000)={p2000:.4e} (< 0.05)", lines)
                else:
                    p_min = float(np.min(series.p_survival))
                    ok = p_min >= 0.98
                    all_ok &= _check("fig4b PB", ok,
                                     f"min P_B={p_min:.4f} (>= 0.98)", lines)
        finally:
            manifest.write()

    for line in lines:
        print(line)
    return EXIT_OK if all_ok else EXIT_REPRO_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floquet-fano",
        description="Complex quasienergy poles and time-domain decay of the "
                    "driven two-level Fano-Anderson chain.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="key=value config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("validate", help="parse a config and print derived quantities")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("pole", help="solve for a complex quasienergy pole")
    common(p)
    p.add_argument("--variant", choices=sorted(_VARIANTS), default=None)
    p.add_argument("--seed-re", type=float, default=None)
    p.add_argument("--seed-im", type=float, default=None)
    p.set_defaults(func=cmd_pole)

    p = sub.add_parser("evolve", help="integrate the Schroedinger equation")
    common(p)
    p.add_argument("--preset", choices=("desk", "paper"), default=None)
    p.add_argument("--initial", choices=("A", "B"), default=None)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("sweep", help="pole sweep over omega or chi")
    common(p)
    p.add_argument("--axis", choices=("omega", "chi"), required=True)
    p.add_argument("--grid", required=True,
                   help="comma list or start:stop:step")
    p.add_argument("--variant", choices=sorted(_VARIANTS), default=None)
    p.add_argument("--with-evolution", action="store_true")
    p.add_argument("--preset", choices=("desk", "paper"), default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("repro", help="one-command reproduction bundles")
    p.add_argument("figure", choices=("fig3", "fig4a", "fig4b", "table-gammaB"))
    p.add_argument("--out", default=None)
    p.add_argument("--preset", choices=("desk", "paper"), default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_repro)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
