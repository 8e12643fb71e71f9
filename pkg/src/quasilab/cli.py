"""Command-line entry point: ``quasilab <subcommand> [--config PATH] [--out DIR]``.

Exit codes: 0 success, 2 validation or input error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, factorization
from ._validation import ValidationError, as_fraction, check_h_values
from .params import make_partition, parse_case
from .semiop import Grid2D, discretize_1d, l2_norm
from .symbols import SubprincipalSymbol, detect_sign_change, normalize_antiderivative, orient
from .transport import DEFAULT_ORDER, CutoffProfile, QuasimodeBuilder

log = logging.getLogger("quasilab")

DEFAULT_H = [float(h) for h in np.geomspace(0.2, 0.02, 8)]


@dataclass
class ExperimentConfig:
    symbol: SubprincipalSymbol
    beta: object = "1/5"
    j: int = 1
    grid: Grid2D = field(default_factory=Grid2D)
    truncation_order: int = DEFAULT_ORDER
    cutoff: CutoffProfile = field(default_factory=CutoffProfile)
    h_values: list = field(default_factory=lambda: list(DEFAULT_H))
    path: str = "reduced"
    output_dir: str = "."
    force: bool = False

    @classmethod
    def from_dict(cls, data):
        if "symbol" not in data:
            raise ValidationError("config needs a 'symbol' section", "cli")
        part = data.get("partition", {})
        cfg = cls(
            symbol=SubprincipalSymbol.from_dict(data["symbol"]),
            beta=str(as_fraction(part.get("beta", "1/5"), "beta")),
            j=parse_case(part.get("j", 1)),
            grid=Grid2D.from_dict(data.get("grid", {})),
            truncation_order=int(data.get("truncation_order", DEFAULT_ORDER)),
            cutoff=CutoffProfile.from_dict(data.get("cutoff", {})),
            h_values=[float(h) for h in data.get("h_values", DEFAULT_H)],
            path=data.get("path", "reduced"),
            output_dir=data.get("output_dir", "."),
            force=bool(data.get("force", False)),
        )
        check_h_values(cfg.h_values, "cli")
        make_partition(cfg.beta, cfg.j)
        return cfg

    def builder(self):
        return QuasimodeBuilder(
            symbol=self.symbol,
            beta=self.beta,
            case=self.j,
            truncation_order=self.truncation_order,
            cutoff=self.cutoff,
            grid=self.grid,
            path=self.path,
            force=self.force,
        )


def load_json(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}", "cli") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc.msg} at line {exc.lineno}", "cli") from None


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def write_json(path, payload):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    return str(obj)


def _out_dir(args, data):
    return Path(args.out or data.get("output_dir", "."))


def cmd_partition(args):
    data = load_json(args.config).get("partition", {})
    beta = args.beta or data.get("beta", "1/5")
    case = args.case or data.get("j", 1)
    part = make_partition(beta, case)
    print(part)
    if args.out:
        a, b, g = part.as_tuple()
        write_json(Path(args.out) / "partition.json", {"alpha": str(a), "beta": str(b), "gamma": str(g), "j": part.j})
    return 0


def cmd_symbol_check(args):
    data = load_json(args.config)
    if "symbol" not in data:
        raise ValidationError("config needs a 'symbol' section", "cli")
    sym = SubprincipalSymbol.from_dict(data["symbol"])
    interval = tuple(data.get("interval", (-1.0, 1.0)))
    report = detect_sign_change(sym, interval, samples=int(data.get("samples", 257)))
    payload = {
        "changes": report.changes,
        "location": report.location,
        "direction": report.direction.value if report.direction else None,
    }
    if report.changes:
        nsym = normalize_antiderivative(orient(sym, report), interval)
        payload.update(shift=nsym.shift, oriented=nsym.symbol.to_dict(), B_im_max=nsym.B_im_max)
    print(json.dumps(payload, sort_keys=True))
    write_json(_out_dir(args, data) / "symbol_check.json", payload)
    return 0


def cmd_build(args):
    data = load_json(args.config)
    cfg = ExperimentConfig.from_dict(data)
    builder = cfg.builder().fit()
    payload = {
        "shift": builder.nsym_.shift,
        "delta": builder.delta_,
        "truncation_order": builder.stack_.N,
        "path": cfg.path,
        "partition": [str(x) for x in builder.partition_.as_tuple()],
        "amplitude_overflow": bool(builder.amplitude_overflow_),
    }
    out = _out_dir(args, data)
    write_csv(out / "amplitudes.csv", ["j", "norm_phi"], [(j, l2_norm(p)) for j, p in enumerate(builder.stack_.phis)])
    write_json(out / "build.json", payload)
    print(json.dumps(payload, sort_keys=True, default=_json_default))
    return 0


def cmd_sweep(args):
    data = load_json(args.config)
    cfg = ExperimentConfig.from_dict(data)
    builder = cfg.builder()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        builder.fit()
        report = analysis.residual_sweep(builder, cfg.h_values)
    for w in caught:
        log.warning("%s", w.message)
    bounds = analysis.norm_bounds_check(report, builder.partition_)
    resolvent = analysis.resolvent_lower_bound(report)
    out = _out_dir(args, data)
    write_csv(out / "sweep.csv", ["h", "norm_v", "norm_Pv", "ratio"], report.rows())
    summary = {
        "path": report.path,
        "truncation_order": report.truncation_order,
        "fitted_slope_residual": report.fitted_slope_residual,
        "fitted_slope_norm": report.fitted_slope_norm,
        "r_squared": report.r_squared,
        "dropped_h": report.dropped,
        "amplitude_overflow": report.amplitude_overflow,
        "norm_bounds": {
            "passed": bounds.passed,
            "upper_C": bounds.upper_C,
            "lower_c": bounds.lower_c,
            "required_exponent": bounds.required_exponent,
            "empirical_exponent": bounds.empirical_exponent,
            "offending_h": list(bounds.offending_h),
        },
        "resolvent": {"passed": resolvent.passed, "monotone": resolvent.monotone, "growth": resolvent.growth},
        "candidate_rates": analysis.candidate_rates(report.truncation_order, builder.partition_),
    }
    write_json(out / "summary.json", summary)
    print(json.dumps({k: summary[k] for k in ("fitted_slope_residual", "r_squared")}, sort_keys=True))
    return 0


def cmd_pspec_scan(args):
    data = load_json(args.config)
    op = data.get("operator", {})
    kind = op.get("kind", "subprincipal")
    symbol = SubprincipalSymbol.from_dict(op["symbol"]) if "symbol" in op else None
    if kind == "subprincipal" and symbol is None:
        symbol = SubprincipalSymbol([0.0], [0.0, -1.0], 1.0)
    beta = float(as_fraction(op.get("beta", "1/5"), "beta"))
    matrix = discretize_1d(kind, float(op.get("h", 0.1)), int(op.get("n", 128)), float(op.get("L", 4.0)), symbol, beta)
    zeta = data.get("zeta", {})
    lattice = analysis.zeta_lattice(zeta.get("re", (-1.0, 1.0, 11)), zeta.get("im", (-1.0, 1.0, 11)))
    pmap = analysis.sigma_min_scan(matrix, lattice)
    write_csv(_out_dir(args, data) / "pspec.csv", ["re_zeta", "im_zeta", "sigma_min"], pmap.rows())
    print(json.dumps({"points": int(lattice.size), "min_sigma": float(pmap.sigma_min.min())}))
    return 0


def cmd_factor_demo(args):
    data = load_json(args.config)
    zeta = data.get("zeta", 1.0)
    zeta = complex(*zeta) if isinstance(zeta, (list, tuple)) else complex(zeta)
    kwargs = {}
    if "h_values" in data:
        kwargs["h_values"] = [float(h) for h in data["h_values"]]
    report = factorization.stalled_family_demo(zeta, data.get("orders", (0, 1, 2)), **kwargs)
    payload = report.to_dict()
    write_json(_out_dir(args, data) / "factor_demo.json", payload)
    print(json.dumps(payload, sort_keys=True))
    return 0


def cmd_apriori(args):
    data = load_json(args.config)
    verdict = analysis.harmonic_apriori_check(
        data.get("h_values", (0.2, 0.1, 0.05)), int(data.get("n", 256)), float(data.get("L", 8.0))
    )
    rows = [(h, s, r) for h, s, r in verdict.rows]
    print("h,sigma_min,sigma_min_over_h")
    for row in rows:
        print(",".join(_fmt(x) for x in row))
    print(f"verdict: {'pass' if verdict.passed else 'fail'}")
    if args.out or args.config:
        write_csv(_out_dir(args, data) / "apriori.csv", ["h", "sigma_min", "sigma_min_over_h"], rows)
    return 0 if verdict.passed else 1


COMMANDS = {
    "partition": cmd_partition,
    "symbol-check": cmd_symbol_check,
    "build": cmd_build,
    "sweep": cmd_sweep,
    "pspec-scan": cmd_pspec_scan,
    "factor-demo": cmd_factor_demo,
    "apriori": cmd_apriori,
}


def make_parser():
    parser = argparse.ArgumentParser(prog="quasilab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--out", help="output directory")
        if name == "partition":
            p.add_argument("--beta", help="unit parameter, e.g. 1/5")
            p.add_argument("--case", help="transversal|tangential or 1|2")
    return parser


def run_command(argv=None):
    args = make_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: module={exc.module} reason={exc.reason}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"error: module=runtime reason={type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(run_command(argv))


if __name__ == "__main__":
    main()
