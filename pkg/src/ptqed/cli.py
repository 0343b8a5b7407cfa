"""Command-line front end: scenario runs, parameter sweeps, CSV emission.

Scenarios
---------
ideal        per-outcome probability / fidelity table (four rows)
decay        fidelity-vs-time curve(s); with --c0-grid, a (c0, t) surface
fluctuation  (c0, x, F_closed, F_numeric, delta) rows for one c0 over an
             x grid, plus the branch-match report on stdout
surface      the same rows over a full (c0, x) grid

CSV contract: one '#'-prefixed provenance line holding the normalized
config, one header line of column names, comma-separated rows with 12
significant digits and '.' decimals.  Identical config + seed produces
byte-identical files.  Exit codes: 0 success, 1 usage error, 2 invariant
violation.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, fields, replace
from decimal import Decimal
from typing import Optional, Sequence

import numpy as np

from .decoherence import (
    AMPLITUDE,
    DEPHASING,
    decay_report,
    fidelity_vs_time,
    post_measurement_events,
)
from .fluctuation import (
    averaged_fidelity,
    branch_match_report,
    closed_form_fidelity,
)
from .protocol import BellOutcome, ProtocolParams, Schedule, run_ideal
from .qstate import InvariantViolation

USAGE_ERROR = 1
INVARIANT_ERROR = 2

_OUTCOMES = {o.value: o for o in BellOutcome}


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 on usage errors (2 is reserved)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(message, file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


@dataclass(frozen=True)
class RunConfig:
    """Normalized scenario configuration; round-trips through `normalized`."""

    scenario: str = "ideal"
    c0: float = float(1 / np.sqrt(2))
    c1_phase: float = 0.0
    lam: float = float(2 * np.pi * 25e3)
    delta: float = float(25 * 2 * np.pi * 25e3)
    kappa: float = 100.0
    x: float = 0.005
    t1: float = Schedule().t1
    t2: float = Schedule().t2
    t3: float = Schedule().t3
    t4: float = Schedule().t4
    outcome: str = "psi+"
    method: str = "quadrature"
    order: int = 21
    samples: int = 100_000
    seed: int = 0
    out: str = "out.csv"
    c0_grid: Optional[str] = None
    x_grid: str = "0:0.05:26"
    t_grid: str = "0:0.008:161"

    def normalized(self) -> dict[str, str]:
        """Flat string form: written to the provenance line and parseable
        back into an identical config."""
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            key = "lambda" if f.name == "lam" else f.name
            out[key] = repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)
        return out


_FLOAT_KEYS = {"c0", "c1_phase", "lambda", "delta", "kappa", "kappa_inv",
               "x", "t1", "t2", "t3", "t4"}
_INT_KEYS = {"order", "samples", "seed"}
_STR_KEYS = {"scenario", "outcome", "method", "out", "c0_grid", "x_grid", "t_grid"}


def _read_config_file(path: str) -> dict[str, str]:
    """Flat key = value lines; '#' starts a comment; unknown keys rejected."""
    values: dict[str, str] = {}
    try:
        text = open(path).read()
    except OSError as exc:
        raise SystemExit(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            print(f"{path}:{lineno}: expected 'key = value', got {raw!r}", file=sys.stderr)
            raise SystemExit(USAGE_ERROR)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FLOAT_KEYS | _INT_KEYS | _STR_KEYS:
            print(f"{path}:{lineno}: unknown config key {key!r}", file=sys.stderr)
            raise SystemExit(USAGE_ERROR)
        values[key] = value
    if "kappa" in values and "kappa_inv" in values:
        print(f"{path}: kappa and kappa_inv are mutually exclusive", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)
    return values


def _build_parser() -> _Parser:
    p = _Parser(prog="ptqed", description=__doc__.splitlines()[0])
    p.add_argument("--scenario", choices=["ideal", "decay", "fluctuation", "surface"])
    p.add_argument("--c0", type=float, help="real input coefficient in [0, 1]")
    p.add_argument("--c1-phase", dest="c1_phase", type=float,
                   help="phase of c1 in radians (|c1| = sqrt(1 - c0^2))")
    p.add_argument("--lambda", dest="lam", type=float, help="atom-mode coupling, rad/s")
    p.add_argument("--delta", type=float, help="detuning, rad/s")
    kap = p.add_mutually_exclusive_group()
    kap.add_argument("--kappa", type=float, help="atomic decay rate, 1/s")
    kap.add_argument("--kappa-inv", dest="kappa_inv", type=float, help="decay time, s")
    p.add_argument("--x", type=float, help="relative interaction-time spread")
    for t in ("t1", "t2", "t3", "t4"):
        p.add_argument(f"--{t}", type=float, help=f"schedule time {t}, s")
    p.add_argument("--outcome", choices=sorted(_OUTCOMES))
    p.add_argument("--method", choices=["quadrature", "montecarlo"])
    p.add_argument("--order", type=int, help="quadrature order (>= 5)")
    p.add_argument("--samples", type=int, help="Monte Carlo samples (>= 1e4)")
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--c0-grid", dest="c0_grid", help="grid as start:stop:steps")
    p.add_argument("--x-grid", dest="x_grid", help="grid as start:stop:steps")
    p.add_argument("--t-grid", dest="t_grid", help="grid as start:stop:steps")
    return p


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """Merge defaults, config-file values, and flags (flags win)."""
    given = list(sys.argv[1:] if argv is None else argv)
    if sum(1 for a in given if a == "--scenario" or a.startswith("--scenario=")) > 1:
        print("conflicting --scenario flags", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)
    args = _build_parser().parse_args(argv)
    merged: dict[str, str] = {}
    if args.config:
        merged.update(_read_config_file(args.config))
    for key in _FLOAT_KEYS | _INT_KEYS | _STR_KEYS:
        attr = "lam" if key == "lambda" else key
        v = getattr(args, attr, None)
        if v is not None:
            merged[key] = str(v)
    if "kappa" in merged and "kappa_inv" in merged:
        # a file value is overridden by either flag; both flags is caught
        # by argparse, so reaching here means file+flag: flag wins
        merged.pop("kappa" if args.kappa is None else "kappa_inv")

    cfg = RunConfig()
    updates = {}
    for key, raw in merged.items():
        try:
            if key == "kappa_inv":
                updates["kappa"] = 1.0 / float(raw)
            elif key in _FLOAT_KEYS:
                updates["lam" if key == "lambda" else key] = float(raw)
            elif key in _INT_KEYS:
                updates[key] = int(raw)
            else:
                updates[key] = raw
        except ValueError:
            print(f"bad value for {key}: {raw!r}", file=sys.stderr)
            raise SystemExit(USAGE_ERROR) from None
    cfg = replace(cfg, **updates)
    if cfg.scenario not in ("ideal", "decay", "fluctuation", "surface"):
        print(f"unknown scenario {cfg.scenario!r}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)
    if cfg.outcome not in _OUTCOMES:
        print(f"unknown outcome {cfg.outcome!r}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)
    if not 0.0 <= cfg.c0 <= 1.0:
        print("c0 must lie in [0, 1]", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)
    return cfg


def parse_grid(spec: str) -> np.ndarray:
    """'start:stop:steps' -> inclusive linspace with `steps` points."""
    parts = spec.split(":")
    if len(parts) != 2 and len(parts) != 3:
        raise SystemExit(f"bad grid spec {spec!r}; expected start:stop:steps")
    try:
        start, stop = float(parts[0]), float(parts[1])
        steps = int(parts[2]) if len(parts) == 3 else 2
    except ValueError:
        raise SystemExit(f"bad grid spec {spec!r}; expected start:stop:steps") from None
    if steps < 1:
        raise SystemExit("grid needs at least one point")
    return np.linspace(start, stop, steps)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    # exactly 12 significant digits, positional, trailing zeros kept
    return format(Decimal(f"{float(v):.11e}"), "f")


def _write_csv(path: str, config: RunConfig, columns: Sequence[str], rows) -> None:
    prov = " ".join(f"{k}={v}" for k, v in config.normalized().items())
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(f"# {prov}\n")
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as exc:
        print(f"cannot write {path}: {exc}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR) from None


def _params_from(cfg: RunConfig, c0: Optional[float] = None) -> ProtocolParams:
    c0 = cfg.c0 if c0 is None else float(c0)
    c1 = np.sqrt(max(0.0, 1.0 - c0**2)) * np.exp(1j * cfg.c1_phase)
    return ProtocolParams(
        c0=c0, c1=c1, lam=cfg.lam, delta=cfg.delta, kappa=cfg.kappa,
        schedule=Schedule(cfg.t1, cfg.t2, cfg.t3, cfg.t4),
    )


def _scenario_ideal(cfg: RunConfig) -> None:
    report = run_ideal(_params_from(cfg))
    total = sum(b.probability for b in report.branches)
    if abs(total - 1.0) > 1e-10:
        raise InvariantViolation("measurement-completeness", f"sum p = {total}")
    rows = [(b.outcome.value, b.probability, b.fidelity) for b in report.branches]
    _write_csv(cfg.out, cfg, ["outcome", "probability", "fidelity"], rows)


def _decay_columns(params, outcome, t_grid):
    curves = [
        fidelity_vs_time(params, outcome, t_grid, variant=AMPLITUDE),
        fidelity_vs_time(params, outcome, t_grid, variant=DEPHASING),
        fidelity_vs_time(params, outcome, t_grid, variant=DEPHASING,
                         events=post_measurement_events(params)),
    ]
    return [(t_grid[i], curves[0][i][1], curves[1][i][1], curves[2][i][1])
            for i in range(len(t_grid))]


def _scenario_decay(cfg: RunConfig) -> None:
    outcome = _OUTCOMES[cfg.outcome]
    t_grid = parse_grid(cfg.t_grid)
    cols = ["t", "fidelity_amplitude", "fidelity_dephasing", "fidelity_match"]
    if cfg.c0_grid is not None:
        rows = []
        for c0 in parse_grid(cfg.c0_grid):
            params = _params_from(cfg, c0)
            rows.extend((c0,) + r for r in _decay_columns(params, outcome, t_grid))
        _write_csv(cfg.out, cfg, ["c0"] + cols, rows)
    else:
        params = _params_from(cfg)
        _write_csv(cfg.out, cfg, cols, _decay_columns(params, outcome, t_grid))
        print(decay_report(params, outcome).text)


def _fluctuation_rows(cfg: RunConfig, c0_values, x_values):
    outcome = _OUTCOMES[cfg.outcome]
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for c0 in c0_values:
        params = _params_from(cfg, c0)
        for x in x_values:
            fc = closed_form_fidelity(float(c0), float(x))
            fn = averaged_fidelity(
                params, float(x), outcome, method=cfg.method,
                order=cfg.order, samples=cfg.samples, rng=rng,
            ).value
            rows.append((c0, x, fc, fn, abs(fc - fn)))
    return rows


def _report_flagged(rows, threshold: float = 1e-3) -> None:
    flagged = [r for r in rows if r[4] > threshold]
    if flagged:
        print(f"{len(flagged)} cell(s) with |F_closed - F_numeric| > {threshold:g}:")
        for c0, x, fc, fn, d in flagged:
            print(f"  c0={c0:.4f} x={x:.4f} delta={d:.3e}")


def _scenario_fluctuation(cfg: RunConfig) -> None:
    rows = _fluctuation_rows(cfg, [cfg.c0], parse_grid(cfg.x_grid))
    _write_csv(cfg.out, cfg, ["c0", "x", "f_closed", "f_numeric", "delta"], rows)
    _report_flagged(rows)
    grid_c0 = np.linspace(0, 1, 5)
    grid_x = np.linspace(0.005, float(parse_grid(cfg.x_grid)[-1]) or 0.03, 3)
    print(branch_match_report(grid_c0, grid_x, order=cfg.order).text)


def _scenario_surface(cfg: RunConfig) -> None:
    c0_grid = parse_grid(cfg.c0_grid if cfg.c0_grid is not None else "0:1:21")
    rows = _fluctuation_rows(cfg, c0_grid, parse_grid(cfg.x_grid))
    _write_csv(cfg.out, cfg, ["c0", "x", "f_closed", "f_numeric", "delta"], rows)
    _report_flagged(rows)


def run_scenario(config: RunConfig) -> int:
    """Execute a scenario; 0 on success, 2 if a physicality check fails."""
    dispatch = {
        "ideal": _scenario_ideal,
        "decay": _scenario_decay,
        "fluctuation": _scenario_fluctuation,
        "surface": _scenario_surface,
    }
    try:
        dispatch[config.scenario](config)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc.prop}", file=sys.stderr)
        return INVARIANT_ERROR
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config = parse_config(argv)
        return run_scenario(config)
    except SystemExit as exc:
        code = exc.code
        if isinstance(code, str):
            print(code, file=sys.stderr)
            return USAGE_ERROR
        return USAGE_ERROR if code is None else int(code)


if __name__ == "__main__":
    sys.exit(main())
