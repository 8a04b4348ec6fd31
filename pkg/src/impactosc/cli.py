"""Command-line front end.

Every run reads one TOML file: an ``[oscillator]`` table plus an optional
table per subcommand.  Data goes to CSV files in ``--out``; summaries and
diagnostics go to stdout and stderr.

Exit codes: 0 success, 2 invalid configuration or unwritable output,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericalFailure
from .grazing_zdm import find_grazing_orbit, impacting_fixed_point_estimate, zdm
from .hybrid_sim import simulate, to_deviation
from .jacobian_analysis import (
    IMPACTING,
    NON_IMPACTING,
    analytic_sweep,
    fit_singularity_exponent,
    fixed_point_dev,
    grazing_h_min,
    grazing_sweep,
    jacobian_dev,
    linear_jacobian,
    resonance_flag,
    trace_coefficient_identity,
)
from .linear_flow import OscillatorConfig, State
from .normal_form import NormalFormParams, nf_fixed_points, nf_sweep

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

OSCILLATOR_KEYS = ("zeta", "omega_n", "force_amp", "omega_f", "phase0", "sigma", "restitution")

# (key, default); a default of REQUIRED must be given in the file
REQUIRED = object()
SECTIONS = {
    "simulate": {"u0": 0.0, "v0": 0.0, "t0": 0.0, "periods": 20.0, "sample_step": None},
    "scan": {
        "deltas": [s * 10.0**-k for k in range(4, 9) for s in (1.0, -1.0)],
        "max_fail_fraction": 0.5,
    },
    "zdm": {"u": REQUIRED, "v": REQUIRED, "t0": None},
    "orbit": {"u": None, "v": None, "t0": 0.0},
    "nf": {
        "tau_l": REQUIRED,
        "delta_l": REQUIRED,
        "tau_r": REQUIRED,
        "delta_r": REQUIRED,
        "mu_min": -1.0,
        "mu_max": 1.0,
        "mu_count": 21,
        "x0": 0.0,
        "y0": 0.0,
        "n_transient": 500,
        "n_keep": 16,
    },
    "identity": {"grid": 50},
}
INT_KEYS = {"mu_count", "n_transient", "n_keep", "grid"}


@dataclass
class RunConfig:
    """Validated contents of a config file."""

    oscillator: OscillatorConfig
    sections: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return self.sections[name]


def _number(where: str, value, allow_inf: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(where, f"must be a number, got {value!r}")
    value = float(value)
    if math.isnan(value) or (math.isinf(value) and not allow_inf):
        raise ConfigError(where, f"must be finite, got {value!r}")
    return value


def _integer(where: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ConfigError(where, f"must be a non-negative integer, got {value!r}")
    return value


def parse_config(data: dict) -> RunConfig:
    """Validate a decoded TOML document.  Errors name ``section.key``."""
    unknown = set(data) - {"oscillator", *SECTIONS}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section")
    osc = data.get("oscillator")
    if not isinstance(osc, dict):
        raise ConfigError("oscillator", "missing [oscillator] table")
    extra = set(osc) - set(OSCILLATOR_KEYS)
    if extra:
        raise ConfigError(f"oscillator.{sorted(extra)[0]}", "unknown key")
    kwargs = {}
    for key in OSCILLATOR_KEYS:
        if key in osc:
            kwargs[key] = _number(f"oscillator.{key}", osc[key], allow_inf=key == "sigma")
        elif key not in ("phase0", "sigma", "restitution"):
            raise ConfigError(f"oscillator.{key}", "required key missing")
    try:
        cfg = OscillatorConfig(**kwargs)
        _ = cfg.amplitude  # undamped resonance is reported here
    except ConfigError as exc:
        raise ConfigError(f"oscillator.{exc.field}", str(exc).split(": ", 1)[1]) from None

    sections = {}
    for name, schema in SECTIONS.items():
        raw = data.get(name, {})
        if not isinstance(raw, dict):
            raise ConfigError(name, "must be a table")
        extra = set(raw) - set(schema)
        if extra:
            raise ConfigError(f"{name}.{sorted(extra)[0]}", "unknown key")
        values = {}
        for key, default in schema.items():
            where = f"{name}.{key}"
            if key not in raw:
                values[key] = default
            elif key == "deltas":
                if not isinstance(raw[key], list) or not raw[key]:
                    raise ConfigError(where, "must be a non-empty array of numbers")
                values[key] = [_number(f"{where}[{i}]", d) for i, d in enumerate(raw[key])]
            elif key in INT_KEYS:
                values[key] = _integer(where, raw[key])
            else:
                values[key] = _number(where, raw[key])
        sections[name] = values
    scan = sections["scan"]
    if not 0.0 <= scan["max_fail_fraction"] <= 1.0:
        raise ConfigError("scan.max_fail_fraction", "must lie in [0, 1]")
    if sections["simulate"]["periods"] <= 0.0:
        raise ConfigError("simulate.periods", "must be > 0")
    step = sections["simulate"]["sample_step"]
    if step is not None and step <= 0.0:
        raise ConfigError("simulate.sample_step", "must be > 0")
    if sections["nf"]["mu_count"] < 1:
        raise ConfigError("nf.mu_count", "must be >= 1")
    if sections["identity"]["grid"] < 1:
        raise ConfigError("identity.grid", "must be >= 1")
    return RunConfig(cfg, sections)


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"TOML syntax error: {exc}") from None
    return parse_config(data)


def _require(run: RunConfig, section: str, *keys):
    values = run.section(section)
    for key in keys:
        if values[key] is REQUIRED:
            raise ConfigError(f"{section}.{key}", "required key missing")
    return values


# ---------------------------------------------------------------- output


def fmt(value) -> str:
    """Shortest round-trip decimal for floats, plain text otherwise."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return str(value)


def write_csv(path: Path, header, rows) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    path.write_bytes(buf.getvalue().encode("utf-8"))
    return path


def _structured(pairs) -> str:
    return "".join(f"{key} = {fmt(value)}\n" for key, value in pairs)


def _out_dir(out) -> Path:
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError("--out", f"cannot create {path}: {exc.strerror}") from None
    return path


def _wall_config(run: RunConfig) -> OscillatorConfig:
    """Oscillator with the wall at ``sigma*`` when the file leaves it unset."""
    cfg = run.oscillator
    if math.isinf(cfg.sigma):
        cfg = cfg.replace(sigma=find_grazing_orbit(cfg).sigma_star)
    return cfg


# -------------------------------------------------------------- commands


def cmd_simulate(run: RunConfig, out: Path) -> list[Path]:
    """Trajectory, impacts and strobe points as three CSV files."""
    cfg = run.oscillator
    sec = run.section("simulate")
    traj = simulate(cfg, State(sec["u0"], sec["v0"]), sec["t0"], sec["periods"] * cfg.period, sec["sample_step"])
    return [
        write_csv(out / "trajectory.csv", ("t", "u", "v"), ((t, u, v) for t, (u, v) in zip(traj.t, traj.x))),
        write_csv(
            out / "impacts.csv",
            ("t", "u", "v_pre", "v_post"),
            ((ev.t, ev.pre_state.u, ev.pre_state.v, ev.post_state.v) for ev in traj.impacts),
        ),
        write_csv(
            out / "strobe.csv",
            ("t", "u", "v"),
            ((t, p.u, p.v) for t, p in zip(traj.strobe_times, traj.strobe_points)),
        ),
    ]


def cmd_graze(run: RunConfig) -> str:
    g = find_grazing_orbit(run.oscillator)
    return _structured(
        [
            ("sigma_star", g.sigma_star),
            ("t_star", g.t_star),
            ("s0", g.s0),
            ("a_star", g.a_star),
            ("u_star", g.x_star.u),
            ("v_star", g.x_star.v),
            ("residual_h", g.residuals[0]),
            ("residual_v", g.residuals[1]),
            ("period", g.period),
        ]
    )


def cmd_scan(run: RunConfig, out: Path, analytic: bool = False) -> tuple[Path, str]:
    """Sweep CSV plus a summary (fitted exponent, det spread, trace identity)."""
    cfg = run.oscillator
    sec = run.section("scan")
    graze = find_grazing_orbit(cfg)
    if analytic:
        records = analytic_sweep(cfg, sec["deltas"], graze)
    else:
        records = grazing_sweep(cfg, sec["deltas"], sec["max_fail_fraction"], graze)
    # rows follow the order of the configured deltas, non-impacting first
    order = {d: i for i, d in reversed(list(enumerate(sec["deltas"])))}
    records.sort(key=lambda r: (order[r.delta_sigma], r.side != NON_IMPACTING))
    path = write_csv(
        out / "scan.csv",
        ("delta_sigma", "sigma", "h_min", "trace", "det", "fp_u", "fp_v", "side"),
        ((r.delta_sigma, r.sigma, r.h_min, r.trace, r.det, r.fixed_point.u, r.fixed_point.v, r.side) for r in records),
    )
    det_ref = float(np.linalg.det(linear_jacobian(cfg)))
    trace_lin = float(np.trace(linear_jacobian(cfg)))
    resonant = resonance_flag(cfg)
    pairs = [("mode", "analytic" if analytic else "simulation"), ("records", len(records))]
    if resonant:
        # the singular term has a vanishing coefficient: no exponent to fit
        pairs += [("exponent", "nan"), ("exponent_error", "resonant forcing, singular coefficient vanishes")]
    else:
        try:
            exponent, r2 = fit_singularity_exponent(records, trace_linear=trace_lin)
            pairs += [("exponent", exponent), ("r_squared", r2)]
        except NumericalFailure as exc:
            pairs += [("exponent", "nan"), ("exponent_error", str(exc))]
    pairs.append(("det_reference", det_ref))
    for side in (NON_IMPACTING, IMPACTING):
        dets = [r.det for r in records if r.side == side]
        spread = max((abs(d / det_ref - 1.0) for d in dets), default=math.nan)
        pairs.append((f"det_spread_{side}", spread))
    lhs, rhs = trace_coefficient_identity(cfg, graze.s0)
    pairs += [("identity_lhs", lhs), ("identity_rhs", rhs), ("identity_residual", abs(lhs - rhs))]
    pairs.append(("resonance_warning", "yes" if resonant else "no"))
    summary = _structured(pairs)
    (out / "scan_summary.txt").write_bytes(summary.encode("utf-8"))
    return path, summary


def cmd_zdm(run: RunConfig) -> str:
    cfg = _wall_config(run)
    sec = _require(run, "zdm", "u", "v")
    graze = find_grazing_orbit(cfg)
    res = zdm(cfg, State(sec["u"], sec["v"]), graze, sec["t0"])
    return _structured(
        [
            ("sigma", cfg.sigma),
            ("penetration", res.penetration),
            ("y", res.y),
            ("alpha", res.alpha),
            ("u_out", res.x_out.u),
            ("v_out", res.x_out.v),
        ]
    )


def cmd_orbit(run: RunConfig) -> str:
    """Period-one orbit near the given guess and its Jacobian."""
    cfg = _wall_config(run)
    sec = run.section("orbit")
    t0 = sec["t0"]
    graze = find_grazing_orbit(cfg)
    est = impacting_fixed_point_estimate(cfg, graze) if t0 == 0.0 else None
    if sec["u"] is not None and sec["v"] is not None:
        e = to_deviation(cfg, State(sec["u"], sec["v"]), t0)
    elif est is not None:
        e = est[0]
    else:
        e = (0.0, 0.0)
    fp = fixed_point_dev(cfg, e, t0)
    j = linear_jacobian(cfg) if fp.impacts == 0 else jacobian_dev(cfg, fp.deviation, t0)[0]
    return _structured(
        [
            ("sigma", cfg.sigma),
            ("u", fp.state.u),
            ("v", fp.state.v),
            ("impacts_per_period", fp.impacts),
            ("residual", fp.residual),
            ("h_min", grazing_h_min(cfg, graze, fp.deviation, t0)),
            ("j11", j[0, 0]),
            ("j12", j[0, 1]),
            ("j21", j[1, 0]),
            ("j22", j[1, 1]),
            ("trace", float(np.trace(j))),
            ("det", float(np.linalg.det(j))),
            ("side", IMPACTING if fp.impacts else NON_IMPACTING),
        ]
    )


def cmd_nf(run: RunConfig, out: Path) -> Path:
    """Kept iterates of the normal form over a grid of ``mu``."""
    sec = _require(run, "nf", "tau_l", "delta_l", "tau_r", "delta_r")
    params = NormalFormParams(sec["tau_l"], sec["delta_l"], sec["tau_r"], sec["delta_r"])
    mus = np.linspace(sec["mu_min"], sec["mu_max"], sec["mu_count"])
    rows = []
    for mu, orbit in nf_sweep(params, mus, sec["x0"], sec["y0"], sec["n_transient"], sec["n_keep"]):
        for (x, y), side in zip(orbit.points, orbit.side_sequence):
            rows.append((mu, x, y, side, orbit.label))
    path = write_csv(out / "nf.csv", ("mu", "x", "y", "side", "classification"), rows)
    fps = []
    for mu in mus:
        for fp in nf_fixed_points(params.with_mu(mu)):
            x, y = fp.point if fp.point is not None else (math.nan, math.nan)
            stable = max(abs(lam) for lam in fp.eigenvalues) < 1.0
            fps.append((mu, fp.side, x, y, fp.admissible, stable, fp.degenerate))
    write_csv(out / "nf_fixed_points.csv", ("mu", "side", "x", "y", "admissible", "stable", "degenerate"), fps)
    return path


def cmd_identity_check(run: RunConfig) -> str:
    """Residual of the s0-free trace-coefficient identity over a grid of s0."""
    cfg = run.oscillator
    n = run.section("identity")["grid"]
    worst = 0.0
    rhs = math.nan
    for s0 in np.linspace(0.0, cfg.period, n, endpoint=False):
        lhs, rhs = trace_coefficient_identity(cfg, float(s0))
        worst = max(worst, abs(lhs - rhs))
    return _structured(
        [
            ("grid", n),
            ("coefficient", rhs),
            ("max_residual", worst),
            ("resonance_warning", "yes" if resonance_flag(cfg) else "no"),
        ]
    )


# ------------------------------------------------------------------ main


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="TOML run configuration")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory for CSV files")
    parser = argparse.ArgumentParser(prog="impactosc", parents=[common], description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "simulate the impacting oscillator",
        "graze": "locate the grazing orbit",
        "scan": "sweep the wall through grazing and fit the trace singularity",
        "zdm": "apply the discontinuity mapping to one state",
        "orbit": "period-one orbit and its Jacobian",
        "nf": "iterate the border-collision normal form over mu",
        "identity-check": "check the s0-free trace-coefficient identity",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, parents=[common], help=text)
        if name == "scan":
            p.add_argument("--analytic", action="store_true", help="use the first-order map, no simulation")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = getattr(args, "config", None)
    out = getattr(args, "out", ".")
    try:
        if config is None:
            raise ConfigError("--config", "a config file is required")
        run = load_config(config)
        if args.command == "simulate":
            for path in cmd_simulate(run, _out_dir(out)):
                print(path)
        elif args.command == "scan":
            path, summary = cmd_scan(run, _out_dir(out), analytic=args.analytic)
            print(path)
            sys.stdout.write(summary)
        elif args.command == "nf":
            print(cmd_nf(run, _out_dir(out)))
        else:
            text = {"graze": cmd_graze, "zdm": cmd_zdm, "orbit": cmd_orbit, "identity-check": cmd_identity_check}[
                args.command
            ](run)
            sys.stdout.write(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailure, ValueError) as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
