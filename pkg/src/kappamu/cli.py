"""Batch command-line front-end: figure-ready sweeps and validation suites.

Subcommands pdf | cdf | coverage | bep sweep one axis and emit CSV
(RFC 4180, LF endings) or newline-framed JSON rows; validate runs the
package oracle suites and emits a JSON report per suite.

Exit codes: 0 success, 1 validation failure, 2 numerical non-convergence
(partial rows are still written, marked in the `failed` column), 64 usage
error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .coefficients import FadingParams, SumSpec
from .distribution import TruncationPolicy, cdf, pdf
from .link_budget import LinkBudget, effective_spec
from .metrics import (
    BFSK_MIN_CORRELATION,
    BFSK_ORTHOGONAL,
    BPSK,
    Modulation,
    SnrThreshold,
    bep,
    bep_asymptotic,
    coverage,
)
from .special import ConvergenceError, DivergenceError
from .validation import SUITES, run_validate

__all__ = ["SweepConfig", "main", "run_bep", "run_cdf", "run_coverage", "run_pdf"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NO_CONVERGENCE = 2
EXIT_USAGE = 64

_CLI_MODS = {"bpsk": BPSK, "bfsk-orth": BFSK_ORTHOGONAL, "bfsk-mincorr": BFSK_MIN_CORRELATION}

_AXES = {"w", "distance", "pt_dbm", "fc_hz", "n"}

_DEFAULTS = {
    "kappa": 1.5,
    "mu": 0.5,
    "n": 64,
    "w_hat": None,
    "pt_dbm": 23.0,
    "fc_ghz": 140.0,
    "distance_m": 200.0,
    "beta": 2.0,
    "noise_figure_db": 6.0,
    "bw_frac": 0.005,
    "alpha": 0.0,
    "gamma_th_db": 0.0,
    "mod": "bpsk",
    "tol": 1e-12,
    "eps_max": 4096,
    "repr": "auto",
    "seed": 42,
    "trials": 200_000,
    "format": "csv",
    "out": None,
    "with_asymptote": False,
    "workers": 4,
}


@dataclass(frozen=True)
class SweepConfig:
    """One evaluated sweep: a quantity, an axis with bounds, and fixed context."""

    quantity: str
    axis: str
    axis_min: float
    axis_max: float
    points: int
    settings: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.quantity not in ("pdf", "cdf", "coverage", "bep"):
            raise ValueError(f"unknown quantity {self.quantity!r}")
        if self.axis not in _AXES:
            raise ValueError(f"unknown axis {self.axis!r}; choose from {sorted(_AXES)}")
        if not (self.axis_min < self.axis_max):
            raise ValueError("axis_min must be strictly below axis_max")
        if self.points < 2:
            raise ValueError("points must be >= 2")

    def grid(self) -> list[float]:
        step = (self.axis_max - self.axis_min) / (self.points - 1)
        return [self.axis_min + i * step for i in range(self.points)]


def _merged(settings: dict) -> dict:
    out = dict(_DEFAULTS)
    for k, v in settings.items():
        if k not in out:
            raise ValueError(f"unknown setting {k!r}")
        if v is not None:
            out[k] = v
    return out


def _policy(s: dict) -> TruncationPolicy:
    return TruncationPolicy(target_tol=s["tol"], eps_max=s["eps_max"])


def _budget(s: dict, distance: float | None = None, pt: float | None = None,
            fc_hz: float | None = None) -> LinkBudget:
    return LinkBudget(
        pt_dbm=s["pt_dbm"] if pt is None else pt,
        fc_hz=s["fc_ghz"] * 1e9 if fc_hz is None else fc_hz,
        distance_m=s["distance_m"] if distance is None else distance,
        path_loss_exp=s["beta"],
        noise_figure_db=s["noise_figure_db"],
        bandwidth_fraction=s["bw_frac"],
        alpha=s["alpha"],
    )


def _spec_at(s: dict, distance=None, pt=None, fc_hz=None, n=None) -> SumSpec:
    params = FadingParams(s["kappa"], s["mu"])
    n_eff = int(s["n"] if n is None else n)
    if s["w_hat"] is not None and (distance, pt, fc_hz) == (None, None, None):
        return SumSpec(params, n_eff, s["w_hat"] * (1.0 - s["alpha"] ** 2))
    return effective_spec(_budget(s, distance, pt, fc_hz), params, n_eff)


def _sweep_rows(config: SweepConfig, axis_key: str, eval_point) -> tuple[list[dict], bool]:
    """Evaluate the grid through a worker pool after a cache warm-up point."""
    grid = config.grid()

    def safe(x: float) -> dict:
        try:
            return eval_point(x)
        except (ConvergenceError, DivergenceError, OverflowError):
            return {axis_key: x}

    first = safe(grid[0])  # fills coefficient caches single-threaded
    workers = int(config.settings.get("workers") or 4)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rest = list(pool.map(safe, grid[1:]))
    rows, any_failed = [], False
    for res in [first] + rest:
        failed = len(res) == 1
        any_failed = any_failed or failed
        rows.append({**res, "failed": int(failed)})
    return rows, any_failed


def run_pdf(config: SweepConfig) -> tuple[list[dict], bool]:
    s = _merged(config.settings)
    if config.axis != "w":
        raise ValueError("pdf sweeps the 'w' axis")
    spec = _spec_at(s)
    pol = _policy(s)

    def point(w: float) -> dict:
        r = pdf(spec, w, pol, representation=s["repr"])
        return {"x": w, "value": r.value, "terms_used": r.terms_used,
                "error_bound": r.error_bound}

    return _sweep_rows(config, "x", point)


def run_cdf(config: SweepConfig) -> tuple[list[dict], bool]:
    s = _merged(config.settings)
    if config.axis != "w":
        raise ValueError("cdf sweeps the 'w' axis")
    spec = _spec_at(s)
    pol = _policy(s)

    def point(w: float) -> dict:
        r = cdf(spec, w, pol, representation=s["repr"])
        return {"x": w, "value": r.value, "terms_used": r.terms_used,
                "error_bound": r.error_bound}

    return _sweep_rows(config, "x", point)


def run_coverage(config: SweepConfig) -> tuple[list[dict], bool]:
    s = _merged(config.settings)
    if config.axis != "distance":
        raise ValueError("coverage sweeps the 'distance' axis")
    th = SnrThreshold.from_db(s["gamma_th_db"])
    pol = _policy(s)

    def point(d: float) -> dict:
        r = coverage(_spec_at(s, distance=d), th, pol, representation=s["repr"])
        return {"distance_m": d, "coverage": r.value, "terms_used": r.terms_used,
                "error_bound": r.error_bound}

    return _sweep_rows(config, "distance_m", point)


def run_bep(config: SweepConfig) -> tuple[list[dict], bool]:
    s = _merged(config.settings)
    if config.axis not in ("pt_dbm", "fc_hz", "n"):
        raise ValueError("bep sweeps 'pt_dbm', 'fc_hz', or 'n'")
    mod = _CLI_MODS[s["mod"]] if s["mod"] in _CLI_MODS else Modulation.from_name(s["mod"])
    pol = _policy(s)
    axis_label = {"pt_dbm": "pt_dbm", "fc_hz": "fc_hz", "n": "n"}[config.axis]

    def point(x: float) -> dict:
        if config.axis == "pt_dbm":
            spec = _spec_at(s, pt=x)
        elif config.axis == "fc_hz":
            spec = _spec_at(s, fc_hz=x)
        else:
            spec = _spec_at(s, n=int(round(x)))
        r = bep(spec, mod, pol)
        approach = "a1" if r.representation == "standard" else "a2"
        row = {axis_label: x, "bep": r.value, "approach": approach,
               "terms_used": r.terms_used, "error_bound": r.error_bound}
        if s["with_asymptote"]:
            row["asymptote"] = bep_asymptotic(spec, mod)
        return row

    return _sweep_rows(config, axis_label, point)


_RUNNERS = {"pdf": run_pdf, "cdf": run_cdf, "coverage": run_coverage, "bep": run_bep}


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _fmt_cell(v) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def _write_rows(rows: list[dict], fmt: str, stream) -> None:
    if not rows:
        return
    cols: list[str] = []
    for row in rows:
        for k in row:
            if k not in cols:
                cols.append(k)
    if fmt == "csv":
        stream.write(",".join(cols) + "\n")
        for row in rows:
            stream.write(",".join(_fmt_cell(row.get(c, "")) for c in cols) + "\n")
    else:
        for row in rows:
            clean = {
                c: (_fmt_cell(v) if isinstance(v, float) and not math.isfinite(v) else v)
                for c, v in ((c, row.get(c, None)) for c in cols)
            }
            stream.write(json.dumps(clean) + "\n")


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="kappamu", description=__doc__.splitlines()[0])
    sub = top.add_subparsers(dest="command")

    def common(p: argparse.ArgumentParser, axis_default: str) -> None:
        p.add_argument("--config", type=str, default=None,
                       help="JSON file with defaults; flags override it")
        p.add_argument("--kappa", type=float)
        p.add_argument("--mu", type=float)
        p.add_argument("--n", type=int)
        p.add_argument("--w-hat", dest="w_hat", type=float,
                       help="direct per-branch mean power; bypasses the link budget")
        p.add_argument("--pt-dbm", dest="pt_dbm", type=float)
        p.add_argument("--fc-ghz", dest="fc_ghz", type=float)
        p.add_argument("--distance-m", dest="distance_m", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--noise-figure-db", dest="noise_figure_db", type=float)
        p.add_argument("--bw-frac", dest="bw_frac", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--gamma-th-db", dest="gamma_th_db", type=float)
        p.add_argument("--mod", choices=sorted(_CLI_MODS))
        p.add_argument("--tol", type=float)
        p.add_argument("--eps-max", dest="eps_max", type=int)
        p.add_argument("--repr", choices=["auto", "standard", "tilde"])
        p.add_argument("--seed", type=int)
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--out", type=str)
        p.add_argument("--workers", type=int)
        p.add_argument("--axis", default=axis_default)
        p.add_argument("--axis-min", dest="axis_min", type=float, required=True)
        p.add_argument("--axis-max", dest="axis_max", type=float, required=True)
        p.add_argument("--points", type=int, default=200)

    for name, axis in (("pdf", "w"), ("cdf", "w"), ("coverage", "distance"), ("bep", "pt_dbm")):
        p = sub.add_parser(name, help=f"sweep {name} over an axis")
        common(p, axis)
        if name == "bep":
            p.add_argument("--with-asymptote", dest="with_asymptote", action="store_true",
                           default=None)

    v = sub.add_parser("validate", help="run oracle suites")
    v.add_argument("--suite", action="append", choices=sorted(SUITES), default=None)
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--trials", type=int, default=200_000)
    v.add_argument("--out", type=str, default=None)
    return top


def _settings_from(args: argparse.Namespace) -> dict:
    settings: dict = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ValueError("config file must hold a JSON object")
        for k, val in loaded.items():
            if k not in _DEFAULTS:
                raise ValueError(f"unknown config key {k!r}")
            settings[k] = val
    for k in _DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            settings[k] = v
    return settings


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    if args.command == "validate":
        suites = args.suite or []
        if not suites:
            print("error: at least one --suite is required", file=sys.stderr)
            return EXIT_USAGE
        reports = [run_validate(s, args.seed, args.trials) for s in suites]
        payload = "\n".join(json.dumps(r) for r in reports) + "\n"
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(payload)
        else:
            sys.stdout.write(payload)
        ok = all(c["pass"] for r in reports for c in r["checks"])
        return EXIT_OK if ok else EXIT_VALIDATION

    try:
        settings = _settings_from(args)
        config = SweepConfig(
            quantity=args.command,
            axis=args.axis.replace("-", "_"),
            axis_min=args.axis_min,
            axis_max=args.axis_max,
            points=args.points,
            settings=settings,
        )
        rows, any_failed = _RUNNERS[args.command](config)
    except (ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    fmt = settings.get("format", "csv")
    out_path = settings.get("out")
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            _write_rows(rows, fmt, fh)
    else:
        _write_rows(rows, fmt, sys.stdout)
    return EXIT_NO_CONVERGENCE if any_failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
