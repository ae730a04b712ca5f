"""Command-line entry point.

Exit codes: 0 success, 2 invalid config or arguments, 3 equilibrium
certificate failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, EquilibriumConfig, EvolutionConfig, PartitionConfig, load_config, preset_path
from .equilibrium import PriceGrid, solve, verify
from .evolution import TERABITS_PER_MBPS_MONTH, Projection, convert_price, decision_scenarios, project, sensitivity
from .sweep import SweepSpec, run_partition_sweep, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CERTIFICATE = 3

log = logging.getLogger("tpmarket")


def _fmt(x) -> str:
    return f"{float(x):.10g}"


def _emit(text: str, out: Path | None, filename: str) -> None:
    """Write ``text`` to ``out/filename``, or to stdout when no directory is given."""
    if out is None:
        sys.stdout.write(text)
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / filename).write_text(text)
    print(f"wrote {out / filename}")


def _load(args, kind):
    path = args.config
    if args.preset is not None:
        path = preset_path(args.preset)
    if path is None:
        raise ConfigError("--config or --preset is required")
    cfg = load_config(path)
    if not isinstance(cfg, kind):
        wanted = {EquilibriumConfig: "equilibrium", PartitionConfig: "partition", EvolutionConfig: "evolution"}[kind]
        raise ConfigError(f"kind: this subcommand needs a {wanted!r} config, got {cfg.kind!r}")
    return cfg


def _with_grid_step(cfg, step):
    if step is None:
        return cfg
    if step <= 0:
        raise ConfigError("--grid-step: must be positive")
    model = cfg.model.model_copy(update={"grid_step_usd_per_mbps_month": step})
    return cfg.model_copy(update={"model": model})


def cmd_solve(args) -> int:
    cfg = _with_grid_step(_load(args, EquilibriumConfig), args.grid_step)
    market, pop = cfg.build()
    if not market.real:
        print("market has no transport providers; every AP takes the dummy option")
        return EXIT_OK
    grid = PriceGrid.for_system(market, pop, cfg.model.grid_step_usd_per_mbps_month)
    result = solve(market, pop, grid)
    competitive = cfg.run.competitive if args.competitive is None else args.competitive
    cert = verify(result, market, pop, grid, competitive=competitive)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["segment", "quality", "price_usd_per_mbps_month", "load_tbps", "effective_capacity_tbps",
                "demand_ceiling_tbps", "ap_types"])
    sizes = result.assignment.share_sizes()
    ceilings = np.bincount(result.assignment.choice, weights=pop.alpha, minlength=len(market.segments))
    for I, seg in enumerate(market.segments):
        name = "dummy" if seg.is_dummy else seg.name
        mu = "inf" if seg.is_dummy else _fmt(seg.mu)
        q = "inf" if seg.is_dummy else _fmt(seg.q)
        w.writerow([name, q, _fmt(result.prices[I]), _fmt(result.loads[I]), mu, _fmt(ceilings[I]), int(sizes[I])])
    _emit(buf.getvalue(), args.out, "equilibrium.csv")
    print(cert.summary())
    return EXIT_OK if cert.passed else EXIT_CERTIFICATE


def _parse_points(text: str) -> list:
    out = []
    for item in text.split(","):
        item = item.strip()
        try:
            out.append(float(item))
        except ValueError:
            out.append(item)
    return out


def cmd_sweep(args) -> int:
    cfg = _with_grid_step(_load(args, EquilibriumConfig), args.grid_step)
    if cfg.run.sweep is None and args.axis is None:
        raise ConfigError("run.sweep: missing (or pass --axis and --points)")
    base = cfg.system()
    sw = cfg.run.sweep
    axis = args.axis if args.axis is not None else sw.axis
    segment = args.segment if args.segment is not None else (sw.segment if sw else None)
    if args.points is not None:
        points = _parse_points(args.points)
    elif sw is not None:
        points = cfg.sweep_spec().points
    else:
        raise ConfigError("--points: required when the config has no run.sweep section")
    spec = SweepSpec(axis, tuple(points), base, segment)
    table = run_sweep(spec, n_jobs=args.jobs or cfg.run.n_jobs)
    _emit(table.to_csv(), args.out, "sweep.csv")
    failed = sum(r.failed for r in table.rows)
    if failed:
        print(f"{failed} sweep point(s) failed", file=sys.stderr)
    return EXIT_OK


def cmd_partition(args) -> int:
    cfg = _load(args, PartitionConfig)
    spec = cfg.sweep_spec()
    rasters = run_partition_sweep(spec)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(rasters[0].names) if rasters else []
    w.writerow([spec.axis, *(f"n_{n}" for n in names), "n_dummy", "skipped_transitions"])
    for i, r in enumerate(rasters):
        w.writerow([_fmt(r.value), *(int(x) for x in r.share_sizes()), r.skipped_transitions()])
        if args.out is not None:
            args.out.mkdir(parents=True, exist_ok=True)
            r.to_csv(args.out / f"partition_{i:03d}.csv")
    _emit(buf.getvalue(), args.out, "partition_summary.csv")
    return EXIT_OK


def _scenario(args):
    cfg = _load(args, EvolutionConfig)
    s = cfg.scenario()
    if args.grid_step is not None:
        if args.grid_step <= 0:
            raise ConfigError("--grid-step: must be positive")
        s = replace(s, grid_step=args.grid_step)
    return cfg, s


def _family_csv(family: dict[str, Projection]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario", "year", "p_A", "p_B"])
    for label, proj in family.items():
        for st in proj.states:
            w.writerow([label, st.year, _fmt(st.p_A), _fmt(st.p_B)])
    return buf.getvalue()


def _emit_family(family: dict[str, Projection], out: Path | None, stem: str) -> None:
    _emit(_family_csv(family), out, f"{stem}.csv")
    for i, (label, proj) in enumerate(family.items()):
        if out is not None:
            proj.to_csv(out / f"{stem}_{i:02d}.csv")
        print(f"[{label}]")
        print(proj.summary())


def cmd_project(args) -> int:
    _, s = _scenario(args)
    proj = project(s, "benchmark")
    _emit(proj.to_csv(), args.out, "projection.csv")
    print(proj.summary())
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    cfg, s = _scenario(args)
    sens = cfg.run.sensitivity
    knob = args.knob if args.knob is not None else (sens.knob if sens else None)
    values = [float(v) for v in _parse_points(args.values)] if args.values else (sens.values if sens else None)
    if knob is None or values is None:
        raise ConfigError("run.sensitivity: missing (or pass --knob and --values)")
    _emit_family(sensitivity(s, knob, values), args.out, "sensitivity")
    return EXIT_OK


def cmd_decide(args) -> int:
    cfg, s = _scenario(args)
    dec = cfg.run.decision
    variant = args.variant if args.variant is not None else (dec.variant if dec else None)
    if variant is None:
        raise ConfigError("run.decision: missing (or pass --variant)")
    values = dec.values() if dec is not None and dec.variant == variant else None
    _emit_family(decision_scenarios(s, variant, values), args.out, f"decision_{variant}")
    return EXIT_OK


_UNITS = ("mbps-month", "terabit")


def cmd_convert(args) -> int:
    if args.src == args.dst:
        value = args.value
    elif args.src == "mbps-month":
        value = convert_price(args.value)
    else:
        if args.value < 0:
            raise ConfigError("value: price must be >= 0")
        value = args.value * TERABITS_PER_MBPS_MONTH
    print(f"{value:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tpmarket", description="AP/TP market equilibrium toolkit")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, competitive=False):
        p.add_argument("--config", type=Path, help="YAML run config")
        p.add_argument("--preset", help="bundled preset name instead of --config")
        p.add_argument("--out", type=Path, help="output directory (default: CSV to stdout)")
        p.add_argument("--grid-step", type=float, help="price grid step, overrides the config")
        if competitive:
            p.add_argument("--competitive", action=argparse.BooleanOptionalAction, default=None,
                           help="also certify that no lower price is feasible")

    p = sub.add_parser("solve", help="equilibrium prices for one system")
    common(p, competitive=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="equilibrium prices along one parameter axis")
    common(p)
    p.add_argument("--axis", help="sweep axis, overrides the config")
    p.add_argument("--segment", help="segment for per-segment axes")
    p.add_argument("--points", help="comma-separated sweep points")
    p.add_argument("--jobs", type=int, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("partition", help="AP choice rasters for fixed price menus")
    common(p)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("project", help="yearly CDN/transit price projection")
    common(p)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("sensitivity", help="projection family over one scenario knob")
    common(p)
    p.add_argument("--knob", help="alpha_start, r_alpha, eta_A or eta_B")
    p.add_argument("--values", help="comma-separated knob values")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("decide", help="capacity growth or peering ratio scenarios")
    common(p)
    p.add_argument("--variant", choices=("growth", "ratio"))
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("convert", help="convert a price between $/Mbps-month and $/terabit")
    p.add_argument("value", type=float)
    p.add_argument("--from", dest="src", choices=_UNITS, default="mbps-month")
    p.add_argument("--to", dest="dst", choices=_UNITS, default="terabit")
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
