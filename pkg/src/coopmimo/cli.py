"""Command-line front end: run experiments, report complexity, plot curves.

The numeric pipeline writes plain CSV plus a JSON manifest; plotting is a
separate subcommand over the CSV so simulations carry no rendering
dependency.  Re-running with a previously written manifest reproduces the
CSVs byte for byte.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import datetime
import json
import sys
from pathlib import Path

from . import __version__
from .model import ConfigError, SystemConfig, validate
from .selection import complexity_report
from .sim import BURN_IN_FRACTION, SCHEMES, run_experiment, scheme_from_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3

CSV_SCHEMA = {
    "version": 1,
    "ber_vs_snr": ["scheme", "snr_db", "ber", "bit_errors", "bits"],
    "ber_vs_symbol": ["scheme", "snr_db", "symbol_index", "ber"],
}


class CliConfigError(Exception):
    """Unreadable or malformed configuration input."""


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SystemConfig)}


def _convert(name: str, raw: str):
    if name == "snr_db_grid":
        parts = raw.replace(",", " ").split()
        return tuple(float(p) for p in parts)
    kind = _FIELD_TYPES[name]
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def load_config(path: str | Path) -> tuple[SystemConfig, dict]:
    """Read a config file (INI sections, or a previously written manifest).

    Returns the system config plus experiment options (scheme list, workers).
    """
    path = Path(path)
    if not path.is_file():
        raise CliConfigError(f"config file not found: {path}")
    if path.suffix == ".json":
        return _load_manifest(path)

    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise CliConfigError(f"cannot parse {path}: {exc}") from exc
    if "system" not in parser:
        raise CliConfigError(f"{path} is missing the [system] section")

    kwargs = {}
    for key, raw in parser["system"].items():
        if key not in _FIELD_TYPES:
            raise CliConfigError(f"{path}: unknown system key '{key}'")
        try:
            kwargs[key] = _convert(key, raw)
        except ValueError as exc:
            raise CliConfigError(f"{path}: bad value for '{key}': {exc}") from exc
    config = SystemConfig(**kwargs)

    options = {"schemes": None, "workers": 1}
    if "experiment" in parser:
        section = parser["experiment"]
        if "schemes" in section:
            options["schemes"] = section["schemes"].replace(",", " ").split()
        if "workers" in section:
            try:
                options["workers"] = int(section["workers"])
            except ValueError as exc:
                raise CliConfigError(f"{path}: bad workers value: {exc}") from exc
    return config, options


def _load_manifest(path: Path) -> tuple[SystemConfig, dict]:
    try:
        data = json.loads(path.read_text())
        cfg = dict(data["config"])
        cfg["snr_db_grid"] = tuple(cfg["snr_db_grid"])
        config = SystemConfig(**cfg)
        options = {
            "schemes": data.get("schemes"),
            "workers": data.get("workers", 1),
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise CliConfigError(f"cannot rebuild config from manifest {path}: {exc}") from exc
    return config, options


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def cmd_run(args) -> int:
    try:
        config, options = load_config(args.config)
    except CliConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.seed is not None:
        config = config.replace(rng_seed=args.seed)
    if args.schemes:
        options["schemes"] = args.schemes
    if args.workers is not None:
        options["workers"] = args.workers
    schemes = options["schemes"] or [scheme_from_config(config)]

    try:
        validate(config)
        unknown = [s for s in schemes if s not in SCHEMES]
        if unknown:
            raise ConfigError(f"unknown schemes {unknown}; valid: {list(SCHEMES)}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    records = run_experiment(
        config, schemes=schemes, n_workers=options["workers"], progress=not args.quiet
    )

    snr_rows, sym_rows = [], []
    for r in records:
        if r.symbol_index is None:
            snr_rows.append(
                [r.scheme, _fmt(r.snr_db), _fmt(r.ber), r.bit_errors, r.bits_total]
            )
        else:
            sym_rows.append([r.scheme, _fmt(r.snr_db), r.symbol_index, _fmt(r.ber)])

    snr_path = out_dir / "ber_vs_snr.csv"
    sym_path = out_dir / "ber_vs_symbol.csv"
    _write_csv(snr_path, CSV_SCHEMA["ber_vs_snr"], snr_rows)
    _write_csv(sym_path, CSV_SCHEMA["ber_vs_symbol"], sym_rows)

    manifest = {
        "tool": "coopmimo",
        "version": __version__,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "seed": config.rng_seed,
        "config": dataclasses.asdict(config),
        "schemes": schemes,
        "workers": options["workers"],
        "burn_in_fraction": BURN_IN_FRACTION,
        "snr_convention": "per-phase total transmit power over per-antenna noise variance",
        "csv_schema": CSV_SCHEMA,
        "outputs": {"ber_vs_snr": snr_path.name, "ber_vs_symbol": sym_path.name},
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    if not args.quiet:
        print(f"wrote {snr_path}, {sym_path}, {out_dir / 'manifest.json'}")
    return EXIT_OK


def cmd_complexity(args) -> int:
    try:
        config, _ = load_config(args.config)
    except CliConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = complexity_report(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT

    print(f"{'scheme':<22s} {'complex mults / instant':>24s}")
    for name, count in report.rows():
        print(f"{name:<22s} {count:>24.4g}")
    print(f"\nconvention: {report.convention}")
    return EXIT_OK


def cmd_plot(args) -> int:
    path = Path(args.csv)
    if not path.is_file():
        print(f"error: CSV not found: {path}", file=sys.stderr)
        return EXIT_CONFIG
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        print(f"error: {path} is empty", file=sys.stderr)
        return EXIT_CONFIG
    header, data = rows[0], rows[1:]
    if not data:
        print(f"error: {path} has no data rows", file=sys.stderr)
        return EXIT_CONFIG

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 5))
    try:
        if header == CSV_SCHEMA["ber_vs_snr"]:
            series: dict[str, list] = {}
            for scheme, snr, ber, *_ in data:
                series.setdefault(scheme, []).append((float(snr), float(ber)))
            for scheme, pts in series.items():
                pts.sort()
                ax.semilogy(*zip(*pts), marker="o", label=scheme)
            ax.set_xlabel("SNR (dB)")
        elif header == CSV_SCHEMA["ber_vs_symbol"]:
            series = {}
            for scheme, snr, idx, ber in data:
                series.setdefault(f"{scheme} @ {float(snr):g} dB", []).append(
                    (int(idx), float(ber))
                )
            for label, pts in series.items():
                pts.sort()
                ax.semilogy(*zip(*pts), label=label)
            ax.set_xlabel("received symbols")
        else:
            print(f"error: unrecognized CSV header in {path}", file=sys.stderr)
            return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: malformed CSV {path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    ax.set_ylabel("BER")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.out)
    plt.close(fig)
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coopmimo",
        description="Cooperative MIMO relay/antenna selection BER simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a BER experiment from a config file")
    p_run.add_argument("config", help="INI config file or manifest.json")
    p_run.add_argument("--out", default="results", help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override rng_seed")
    p_run.add_argument(
        "--schemes", nargs="+", default=None, help=f"subset of {list(SCHEMES)}"
    )
    p_run.add_argument("--workers", type=int, default=None, help="parallel packet workers")
    p_run.add_argument("--quiet", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_cx = sub.add_parser("complexity", help="print the complexity report")
    p_cx.add_argument("config")
    p_cx.set_defaults(func=cmd_complexity)

    p_plot = sub.add_parser("plot", help="plot a results CSV")
    p_plot.add_argument("csv")
    p_plot.add_argument("--out", default="ber.pdf", help="output figure (pdf/svg/png)")
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
