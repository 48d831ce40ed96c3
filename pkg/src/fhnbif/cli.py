"""Command-line front end.

Every command resolves its settings from built-in defaults, an optional
JSON config file and explicit flags (in increasing priority), writes the
fully resolved config next to its outputs and can be re-run from it.
Exit status is 0 on success, 2 on invalid input and 3 when a numerical
method fails to converge.
"""

from __future__ import annotations

import copy
import functools
import json
import math
import os
import sys
from pathlib import Path

import click
import numpy as np

from fhnbif import __version__
from fhnbif._io import write_csv, write_json
from fhnbif.errors import (
    ConfigError,
    DivergenceError,
    FhnBifError,
    FloquetAccuracyError,
    MixedModeError,
    NonConvergenceError,
    TooShortError,
)
from fhnbif.model import Params, find_rest_points

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3
ENV_OUTPUT = "FHNBIF_OUTPUT_DIR"
DEFAULT_OUTPUT = "fhnbif-out"
DEFAULT_SEED = 42

BLOCK_DEFAULTS: dict[str, dict] = {
    "simulate": {"ic": [0.1, 0.1, 0.1, 0.1], "t_end": 1000.0, "h": None, "t_trans": None, "stride": 10},
    "stability": {"tau_max": 13.0, "n_tau": 261, "j_max": 3},
    "atlas": {
        "box": [0.0, 9.0, 0.0, 1.4],
        "j_max": 3,
        "max_step": 0.05,
        "nontrivial": True,
        "grid": [0, 0],
        "n_random": 32,
        "workers": 1,
    },
    "orbit": {
        "from_hopf": None,
        "ic": None,
        "intervals": 40,
        "n_cheb": 24,
        "continue_in": None,
        "range": None,
        "t_max": 500.0,
    },
    "basin": {
        "ics": None,
        "n_random": 32,
        "half_width": 2.0,
        "reference": True,
        "structured": True,
        "antipodes": False,
    },
}
PARAM_KEYS = ("a", "b1", "b2", "c", "tau")
TOP_KEYS = {"params", "rng_seed", "output_dir", "command", "version", "figure", *BLOCK_DEFAULTS}


# -- configuration -------------------------------------------------------------


def load_config(path: str | None) -> dict:
    """Parse and shape-check a JSON config file."""
    if path is None:
        return {}
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    doc.pop("schema", None)
    for key in doc:
        if key not in TOP_KEYS:
            raise ConfigError(f"{path}: unknown field '{key}'")
    for key in doc.get("params", {}):
        if key not in PARAM_KEYS:
            raise ConfigError(f"{path}: unknown field 'params.{key}'")
    for block, defaults in BLOCK_DEFAULTS.items():
        for key in doc.get(block, {}):
            if key not in defaults:
                raise ConfigError(f"{path}: unknown field '{block}.{key}'")
    return doc


def resolve(command: str, config_path: str | None, params: dict, block: dict, seed, out) -> dict:
    """Merge defaults, config file and flags into one run config."""
    doc = load_config(config_path)
    merged_params = {**Params().as_dict(), **doc.get("params", {})}
    merged_params.update({k: v for k, v in params.items() if v is not None})
    merged_block = copy.deepcopy(BLOCK_DEFAULTS.get(command, {}))
    merged_block.update(doc.get(command, {}))
    merged_block.update({k: v for k, v in block.items() if v is not None})
    try:
        p = Params(**{k: float(merged_params[k]) for k in PARAM_KEYS})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"params: {exc}") from None
    out_dir = out or doc.get("output_dir") or os.environ.get(ENV_OUTPUT) or DEFAULT_OUTPUT
    rng = seed if seed is not None else doc.get("rng_seed", DEFAULT_SEED)
    if not isinstance(rng, int):
        raise ConfigError(f"rng_seed must be an integer, got {rng!r}")
    return {
        "command": command,
        "params": p.as_dict(),
        command: merged_block,
        "rng_seed": rng,
        "output_dir": str(out_dir),
        "_p": p,
    }


def _prepare(cfg: dict) -> Path:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    body = {k: v for k, v in cfg.items() if not k.startswith("_")}
    write_json(out / "config.json", "config", {"version": __version__, **body})
    return out


def _vector(value, name: str, n: int = 4) -> np.ndarray:
    if isinstance(value, str):
        try:
            value = [float(x) for x in value.replace(";", ",").split(",")]
        except ValueError:
            raise ConfigError(f"{name}: expected {n} comma-separated numbers, got {value!r}") from None
    arr = np.asarray(value, dtype=float)
    if arr.shape != (n,) or not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name}: expected {n} finite numbers, got {value!r}")
    return arr


def guarded(fn):
    """Map package errors onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, ValueError, MixedModeError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INVALID)
        except (NonConvergenceError, FloquetAccuracyError, DivergenceError) as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(EXIT_NUMERICAL)
        except FhnBifError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_NUMERICAL)

    return wrapper


def common(fn):
    """Model parameters, config file, seed and output directory flags."""
    opts = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON config file."),
        click.option("--out", "out", type=click.Path(file_okay=False), help=f"Output directory (or ${ENV_OUTPUT})."),
        click.option("--seed", type=int, default=None, help="Random seed (default 42)."),
        click.option("--a", type=float, default=None),
        click.option("--b1", type=float, default=None),
        click.option("--b2", type=float, default=None),
        click.option("--c", type=float, default=None, help="Coupling strength."),
        click.option("--tau", type=float, default=None, help="Delay."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _params_from(kw: dict) -> dict:
    return {k: kw.pop(k) for k in PARAM_KEYS}


# -- commands -----------------------------------------------------------------


@click.group()
@click.version_option(__version__)
def cli() -> None:
    """Stability and bifurcation analysis of two delay-coupled FitzHugh-Nagumo neurons."""


def _summary_dict(res) -> dict:
    from fhnbif.orbit.detect import NonPeriodic, OrbitSummary, Quiescent

    if isinstance(res, OrbitSummary):
        return {
            "periodic": True,
            "kind": "periodic",
            "period": res.period,
            "amplitude": res.amplitude,
            "phase_shift": res.phase_shift,
            "sync": res.sync,
            "mean": res.mean,
            "period_spread": res.period_spread,
            "crossings_per_period": res.crossings_per_period,
            "stability": res.stability.label,
        }
    if isinstance(res, Quiescent):
        return {"periodic": False, "kind": "quiescent", "state": res.state, "amplitude": res.amplitude}
    if isinstance(res, NonPeriodic):
        return {"periodic": False, "kind": "nonperiodic", "reason": res.reason, "period_spread": res.period_spread, "amplitude": res.amplitude}
    return {"periodic": False, "kind": "undetermined", "reason": str(res)}


@cli.command()
@common
@click.option("--ic", type=str, default=None, help="Constant initial history v1,w1,v2,w2.")
@click.option("--t-end", type=float, default=None)
@click.option("--h", type=float, default=None, help="Step size (default min(tau/8, 0.01)).")
@click.option("--t-trans", type=float, default=None, help="Transient excluded from detection (default t_end/2).")
@click.option("--stride", type=int, default=None, help="Write every n-th step.")
@guarded
def simulate(config_path, out, seed, **kw):
    """Integrate from a constant history and classify the long-time behaviour."""
    from fhnbif.orbit.detect import detect_orbit
    from fhnbif.sim import SimConfig, integrate

    cfg = resolve("simulate", config_path, _params_from(kw), kw, seed, out)
    p, blk = cfg["_p"], cfg["simulate"]
    ic = _vector(blk["ic"], "simulate.ic")
    t_end = float(blk["t_end"])
    t_trans = 0.5 * t_end if blk["t_trans"] is None else float(blk["t_trans"])
    stride = int(blk["stride"])
    if stride < 1:
        raise ConfigError("simulate.stride must be >= 1")
    out_dir = _prepare(cfg)
    traj = integrate(p, ic, SimConfig(t_end=t_end, h=blk["h"]))
    try:
        res = detect_orbit(traj.tail(t_end - t_trans))
    except TooShortError as exc:
        res = exc
    rows = np.column_stack([traj.mesh, traj.values])[::stride]
    write_csv(out_dir / "trajectory.csv", "trajectory", ["t", "v1", "w1", "v2", "w2"], rows)
    summary = _summary_dict(res)
    write_json(out_dir / "summary.json", "summary", {"params": p.as_dict(), **summary})
    click.echo(json.dumps({"periodic": summary["periodic"], "kind": summary["kind"]}))


@cli.command()
@common
@click.option("--tau-max", type=float, default=None, help="End of the delay sweep.")
@click.option("--n-tau", type=int, default=None, help="Sweep samples.")
@click.option("--j-max", type=int, default=None, help="Highest delay index of reported crossings.")
@guarded
def stability(config_path, out, seed, **kw):
    """Rest points, their spectra and the Hopf delays of the origin."""
    from fhnbif.chareq import hopf_delays, rightmost_spectrum, trivial_stability

    cfg = resolve("stability", config_path, _params_from(kw), kw, seed, out)
    p, blk = cfg["_p"], cfg["stability"]
    out_dir = _prepare(cfg)
    ts = trivial_stability(p)
    hopfs = hopf_delays(p, int(blk["j_max"]))
    rests = []
    for r in find_rest_points(p):
        sp = rightmost_spectrum(p, r)
        rests.append(
            {
                "kind": r.kind,
                "state": r.state,
                "unstable_count": sp.unstable_count,
                "rightmost": [complex(x) for x in sp.eigenvalues[sp.converged][:6]],
            }
        )
    report = {
        "params": p.as_dict(),
        "trivial": {
            "kind": ts.kind,
            "tau0": ts.tau0,
            "stable_all_tau": ts.kind.value == "StableAllTau",
            "conditions": ts.conditions,
            "routh_hurwitz_margins": ts.routh_hurwitz.margins if ts.routh_hurwitz else None,
        },
        "crossings": [
            {"tau": h.tau, "omega": h.omega, "k": h.k, "j": h.j, "sign": h.crossing_sign, "residual": h.residual}
            for h in hopfs
        ],
        "rest_points": rests,
    }
    write_json(out_dir / "stability.json", "stability", report)
    taus = np.linspace(0.0, float(blk["tau_max"]), int(blk["n_tau"]))
    sweep = []
    for t in taus:
        sp = rightmost_spectrum(p.replace(tau=float(t)), None, order=24)
        lead = sp.rightmost
        sweep.append([t, lead.real, abs(lead.imag), sp.unstable_count])
    write_csv(out_dir / "spectrum_sweep.csv", "spectrum_sweep", ["tau", "re", "im", "unstable"], sweep)
    click.echo(json.dumps({"kind": ts.kind.value, "tau0": ts.tau0}))


def _write_branches(out_dir: Path, branches, prefix: str) -> list[dict]:
    index = []
    for n, b in enumerate(branches):
        name = f"{prefix}_{n:02d}.csv"
        header, data = b.columns()
        write_csv(out_dir / name, "branch", header, data, {"kind": b.kind.value, "label": b.name})
        index.append({"file": name, "kind": b.kind, "name": b.name, "points": len(b)})
    return index


def _gnuplot(path: Path, title: str, xlabel: str, ylabel: str, series: list[tuple[str, str, str]]) -> Path:
    lines = [
        "set datafile separator ','",
        "set key outside",
        f"set title '{title}'",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
    ]
    plots = [f"'{f}' using {cols} every ::1 with lines title '{t}'" for f, cols, t in series]
    lines.append("plot " + ", \\\n     ".join(plots) if plots else "# nothing to plot")
    path.write_text("\n".join(lines) + "\n")
    return path


def run_atlas(p: Params, blk: dict, out_dir: Path, seed: int) -> dict:
    from fhnbif.atlas import (
        ICProtocol,
        ParamBox,
        codim2_points,
        nontrivial_hopf_curves,
        pitchfork_line,
        regime_grid,
        trivial_hopf_curves,
    )

    box_v = [float(x) for x in blk["box"]]
    if len(box_v) != 4 or box_v[0] >= box_v[1] or box_v[2] >= box_v[3] or box_v[0] < 0:
        raise ConfigError(f"atlas.box must be tau_lo,tau_hi,c_lo,c_hi with lo < hi, got {blk['box']!r}")
    box = ParamBox((box_v[0], box_v[1]), (box_v[2], box_v[3]))
    step = float(blk["max_step"])
    triv = trivial_hopf_curves(box, j_max=int(blk["j_max"]), p=p, max_step=step)
    nontriv = nontrivial_hopf_curves(box, j_max=int(blk["j_max"]), p=p, max_step=step) if blk["nontrivial"] else []
    pf = pitchfork_line(box, p, step)
    branches = triv + nontriv + ([pf] if pf.metadata["inside"] else [])
    index = _write_branches(out_dir, triv, "hopf_trivial")
    index += _write_branches(out_dir, nontriv, "hopf_nontrivial")
    if pf.metadata["inside"]:
        index += _write_branches(out_dir, [pf], "pitchfork")
    pts = codim2_points(branches, box)
    write_json(
        out_dir / "codim2.json",
        "codim2",
        {"points": [{"kind": q.kind, "tau": q.tau, "c": q.c, "frequencies": q.frequencies, "residuals": q.residuals, "branches": q.branches} for q in pts]},
    )
    write_json(out_dir / "branches.json", "branches", {"branches": index})
    series = [(e["file"], "1:2", e["name"]) for e in index]
    _gnuplot(out_dir / "atlas.gp", "bifurcation diagram", "tau", "c", series)
    n_t, n_c = (int(x) for x in blk["grid"])
    if n_t > 0 and n_c > 0:
        proto = ICProtocol(n_random=int(blk["n_random"]), seed=seed)
        grid = regime_grid(box, (n_t, n_c), proto, p=p, workers=int(blk["workers"]))
        names = sorted({r[2] for r in grid.rows()})
        code = {nm: i for i, nm in enumerate(names)}
        rows = [(t, c, code[nm]) for t, c, nm in grid.rows()]
        write_csv(out_dir / "grid.csv", "regime_grid", ["tau", "c", "regime"], rows)
        write_json(out_dir / "grid_legend.json", "regime_legend", {"regimes": names})
    return {"branches": len(index), "codim2": len(pts)}


@cli.command()
@common
@click.option("--box", type=str, default=None, help="tau_lo,tau_hi,c_lo,c_hi")
@click.option("--j-max", type=int, default=None)
@click.option("--max-step", type=float, default=None, help="Largest point spacing along a curve.")
@click.option("--grid", type=str, default=None, help="n_tau,n_c regime grid (0,0 to skip).")
@click.option("--n-random", type=int, default=None, help="Random ICs per grid cell.")
@click.option("--workers", type=int, default=None)
@guarded
def atlas(config_path, out, seed, **kw):
    """Hopf curves, the pitchfork line, codimension-two points and regime grid."""
    if kw.get("box") is not None:
        kw["box"] = [float(x) for x in kw["box"].split(",")]
    if kw.get("grid") is not None:
        kw["grid"] = [int(x) for x in kw["grid"].split(",")]
    cfg = resolve("atlas", config_path, _params_from(kw), kw, seed, out)
    out_dir = _prepare(cfg)
    info = run_atlas(cfg["_p"], cfg["atlas"], out_dir, cfg["rng_seed"])
    click.echo(json.dumps(info))


def _parse_hopf_label(value) -> tuple[int, int]:
    parts = value if isinstance(value, (list, tuple)) else str(value).replace(",", " ").split()
    got = {}
    for part in parts:
        key, _, val = str(part).partition("=")
        if key not in ("k", "j") or not val.strip().lstrip("-").isdigit():
            raise ConfigError(f"orbit.from_hopf: expected 'k=<int> j=<int>', got {value!r}")
        got[key] = int(val)
    if set(got) != {"k", "j"}:
        raise ConfigError(f"orbit.from_hopf: expected 'k=<int> j=<int>', got {value!r}")
    return got["k"], got["j"]


def _profile_csv(path: Path, cyc) -> None:
    s = np.linspace(0.0, 1.0, 513)[:-1]
    rows = np.column_stack([s, cyc(s)])
    write_csv(path, "profile", ["s", "v1", "w1", "v2", "w2"], rows, {"T": cyc.period, "c": cyc.params.c, "tau": cyc.params.tau})


@cli.command()
@common
@click.option("--from-hopf", "from_hopf", nargs=2, type=str, default=None, help="Seed at a Hopf point: k=<int> j=<int>.")
@click.option("--ic", type=str, default=None, help="Seed by simulating from this constant history.")
@click.option("--intervals", type=int, default=None)
@click.option("--n-cheb", type=int, default=None, help="History points of the monodromy discretisation.")
@click.option("--continue-in", type=click.Choice(["c", "tau"]), default=None, help="Continue the cycle in this parameter.")
@click.option("--range", "range_", nargs=2, type=float, default=None, help="Continuation range lo hi.")
@click.option("--t-max", type=float, default=None, help="Period treated as a homoclinic limit.")
@guarded
def orbit(config_path, out, seed, from_hopf, range_, **kw):
    """Converge a periodic orbit, compute its Floquet multipliers, optionally continue it."""
    from fhnbif.atlas import continue_cycle_branch
    from fhnbif.chareq import hopf_delays
    from fhnbif.orbit.basin import classify_ic
    from fhnbif.orbit.bvp import BVPConfig, cycle_from_hopf, solve_cycle_bvp
    from fhnbif.orbit.continuation import ContinuationConfig
    from fhnbif.orbit.detect import OrbitSummary
    from fhnbif.orbit.floquet import floquet_multipliers

    kw["from_hopf"] = list(from_hopf) if from_hopf else None
    kw["range"] = list(range_) if range_ else None
    cfg = resolve("orbit", config_path, _params_from(kw), kw, seed, out)
    p, blk = cfg["_p"], cfg["orbit"]
    bvp = BVPConfig(intervals=int(blk["intervals"]))
    if blk["from_hopf"] is not None:
        k, j = _parse_hopf_label(blk["from_hopf"])
        match = [h for h in hopf_delays(p, max(j, 0)) if h.k == k and h.j == j]
        if not match:
            raise ConfigError(f"no Hopf point k={k} j={j} at c={p.c}")
        h = match[0]
        p = p.replace(tau=h.tau)
        cfg["params"] = p.as_dict()
        cyc = cycle_from_hopf(p, h.omega, free="tau", cfg=bvp)
    else:
        ic = _vector(blk["ic"] if blk["ic"] is not None else [1.3, 1.5, 1.4, 1.0], "orbit.ic")
        res = classify_ic(p, ic)
        if not isinstance(res, OrbitSummary):
            raise ConfigError(f"simulation from {ic.tolist()} does not settle on a periodic orbit")
        cyc = solve_cycle_bvp(p, res, bvp)
    out_dir = _prepare(cfg)
    mu = floquet_multipliers(cyc.params, cyc, n_cheb=int(blk["n_cheb"]))
    summ = cyc.summary(mu)
    _profile_csv(out_dir / "profile.csv", cyc)
    write_json(
        out_dir / "floquet.json",
        "floquet",
        {
            "period": cyc.period,
            "params": cyc.params.as_dict(),
            "multipliers": [{"re": m.real, "im": m.imag, "modulus": abs(m)} for m in mu[:12]],
            "stability": summ.stability.label,
        },
    )
    write_json(out_dir / "summary.json", "summary", {"params": cyc.params.as_dict(), **_summary_dict(summ)})
    info = {"period": cyc.period, "stability": summ.stability.label}
    if blk["continue_in"]:
        if blk["range"] is None:
            raise ConfigError("orbit.range is required with continue_in")
        lo, hi = (float(x) for x in blk["range"])
        branch, _ = continue_cycle_branch(cyc, blk["continue_in"], (lo, hi), ContinuationConfig(t_max=float(blk["t_max"])))
        header, data = branch.columns()
        write_csv(out_dir / "branch.csv", "branch", header, data, {"kind": branch.kind.value, "parameter": blk["continue_in"]})
        write_json(
            out_dir / "events.json",
            "events",
            {
                "end": branch.metadata["end"],
                "events": [{"labels": list(e.labels), "param": e.param, "period": e.period, "angle": e.angle} for e in branch.events],
            },
        )
        info["events"] = [[lb.value for lb in e.labels] + [e.param] for e in branch.events]
    click.echo(json.dumps(info))


def _inventory_dict(inv) -> dict:
    items = []
    for a in inv.attractors:
        entry = {"kind": a.kind, "ics": a.ics}
        if a.kind == "periodic":
            s = a.summary
            entry.update(period=s.period, amplitude=s.amplitude, sync=s.sync, phase_shift=s.phase_shift, mean=s.mean)
        elif a.kind == "rest":
            entry.update(state=a.summary.state, rest_kind=a.rest.kind if a.rest is not None else None)
        else:
            entry.update(reason=a.summary.reason, amplitude=a.summary.amplitude)
        items.append(entry)
    return {
        "params": inv.params.as_dict(),
        "periodic": len(inv.periodic),
        "rest": len(inv.rest),
        "nonperiodic": len(inv.nonperiodic),
        "attractors": items,
        "per_ic": inv.per_ic,
    }


@cli.command()
@common
@click.option("--ic", "ics", type=str, multiple=True, help="Extra constant history (repeatable).")
@click.option("--n-random", type=int, default=None)
@click.option("--half-width", type=float, default=None, help="Random ICs are uniform in [-w, w]^4.")
@click.option("--reference/--no-reference", default=None, help="Include the built-in reference ICs.")
@click.option("--structured/--no-structured", default=None, help="Include in-phase structured ICs.")
@click.option("--antipodes/--no-antipodes", default=None, help="Add the antipodal image of every IC.")
@guarded
def basin(config_path, out, seed, ics, **kw):
    """Inventory of attractors reached from constant initial histories."""
    from fhnbif.atlas import ICProtocol
    from fhnbif.orbit.basin import basin_probe

    kw["ics"] = list(ics) if ics else None
    cfg = resolve("basin", config_path, _params_from(kw), kw, seed, out)
    p, blk = cfg["_p"], cfg["basin"]
    proto = ICProtocol(
        reference=bool(blk["reference"]),
        n_random=int(blk["n_random"]),
        seed=cfg["rng_seed"],
        half_width=float(blk["half_width"]),
        structured=bool(blk["structured"]),
        antipodes=bool(blk["antipodes"]),
    )
    extra = [_vector(v, "basin.ics") for v in (blk["ics"] or [])]
    ic_arr = proto.ics()
    if extra:
        ic_arr = np.vstack([np.array(extra), ic_arr])
    if ic_arr.shape[0] == 0:
        raise ConfigError("no initial conditions selected")
    out_dir = _prepare(cfg)
    inv = basin_probe(p, ic_arr)
    write_csv(out_dir / "ics.csv", "ics", ["v1", "w1", "v2", "w2"], ic_arr)
    write_json(out_dir / "inventory.json", "inventory", _inventory_dict(inv))
    click.echo(json.dumps({"periodic": len(inv.periodic), "rest": len(inv.rest), "nonperiodic": len(inv.nonperiodic)}))


# -- figure recipes ------------------------------------------------------------

FIGURES = (
    "instant-cascade",
    "small-delay",
    "trivial-hopf",
    "spectrum-sweep",
    "delay-switching",
    "bistability",
    "nontrivial-hopf",
    "region-9",
)


def _fig_trivial_hopf(out_dir: Path, p: Params, seed: int) -> None:
    blk = {**BLOCK_DEFAULTS["atlas"], "nontrivial": False}
    run_atlas(p, blk, out_dir, seed)


def _fig_nontrivial_hopf(out_dir: Path, p: Params, seed: int) -> None:
    run_atlas(p, dict(BLOCK_DEFAULTS["atlas"]), out_dir, seed)


def _fig_small_delay(out_dir: Path, p: Params, seed: int) -> None:
    blk = {**BLOCK_DEFAULTS["atlas"], "box": [0.0, 1.0, 0.3, 1.3]}
    run_atlas(p, blk, out_dir, seed)


def _fig_spectrum_sweep(out_dir: Path, p: Params, seed: int) -> None:
    from fhnbif.chareq import rightmost_spectrum

    p = p.replace(c=0.2)
    rows = []
    for t in np.linspace(0.0, 13.0, 261):
        sp = rightmost_spectrum(p.replace(tau=float(t)), None, order=24)
        eig = sp.eigenvalues[sp.converged][:6]
        rows.append([t, *eig.real, *[math.nan] * (6 - eig.size)])
    write_csv(out_dir / "spectrum_sweep.csv", "spectrum_sweep", ["tau"] + [f"re{i}" for i in range(6)], rows)
    _gnuplot(out_dir / "figure.gp", "rightmost real parts, c=0.2", "tau", "Re lambda", [("spectrum_sweep.csv", f"1:{i + 2}", f"re{i}") for i in range(6)])


def _fig_delay_switching(out_dir: Path, p: Params, seed: int) -> None:
    from fhnbif.sim import SimConfig, integrate

    series = []
    for tau in (1.5, 1.8, 2.5, 3.5, 4.0, 5.3, 6.0):
        traj = integrate(p.replace(c=0.2, tau=tau), np.full(4, 0.1), SimConfig(t_end=600.0, t_trans=500.0))
        name = f"series_tau{tau:g}.csv"
        write_csv(out_dir / name, "trajectory", ["t", "v1", "w1", "v2", "w2"], np.column_stack([traj.mesh, traj.values])[::5])
        series += [(name, "1:2", f"v1 tau={tau:g}"), (name, "1:4", f"v2 tau={tau:g}")]
    _gnuplot(out_dir / "figure.gp", "delay-induced switching, c=0.2", "t", "v", series)


def _fig_instant_cascade(out_dir: Path, p: Params, seed: int) -> None:
    from fhnbif.atlas import continue_cycle_branch
    from fhnbif.chareq import ode_hopf_coupling, rightmost_spectrum
    from fhnbif.orbit.bvp import BVPConfig, cycle_from_hopf
    from fhnbif.orbit.continuation import ContinuationConfig

    p = p.replace(tau=0.0)
    rows = []
    for c in np.linspace(0.0, 1.3, 261):
        for r in find_rest_points(p.replace(c=float(c))):
            rows.append([c, r.state[0], rightmost_spectrum(p.replace(c=float(c)), r).unstable_count])
    write_csv(out_dir / "rest_points.csv", "rest_points", ["c", "v1", "unstable"], rows)
    c_h = ode_hopf_coupling(p)
    p_h = p.replace(c=c_h)
    w = abs(rightmost_spectrum(p_h).rightmost.imag)
    seed_cyc = cycle_from_hopf(p_h, w, free="c", cfg=BVPConfig(intervals=80))
    branch, _ = continue_cycle_branch(seed_cyc, "c", (0.3, 1.3), ContinuationConfig(bvp=BVPConfig(intervals=80, maxit=12)))
    header, data = branch.columns()
    write_csv(out_dir / "cycles.csv", "branch", header, data, {"kind": branch.kind.value, "parameter": "c"})
    write_json(
        out_dir / "events.json",
        "events",
        {"events": [{"labels": list(e.labels), "param": e.param, "period": e.period} for e in branch.events]},
    )
    _gnuplot(
        out_dir / "figure.gp",
        "undelayed cascade",
        "c",
        "v1 / amplitude",
        [("rest_points.csv", "1:2", "rest points"), ("cycles.csv", "2:3", "cycle amplitude")],
    )


def _fig_probe(out_dir: Path, p: Params, seed: int, c: float, tau: float, ics) -> None:
    from fhnbif.atlas import ICProtocol
    from fhnbif.orbit.basin import basin_probe
    from fhnbif.sim import SimConfig, integrate

    p = p.replace(c=c, tau=tau)
    inv = basin_probe(p, np.vstack([np.asarray(ics, dtype=float), ICProtocol(n_random=8, seed=seed).ics()]))
    write_json(out_dir / "inventory.json", "inventory", _inventory_dict(inv))
    series = []
    for n, ic in enumerate(ics):
        traj = integrate(p, np.asarray(ic, dtype=float), SimConfig(t_end=2000.0, t_trans=1900.0))
        name = f"series_{n}.csv"
        write_csv(out_dir / name, "trajectory", ["t", "v1", "w1", "v2", "w2"], np.column_stack([traj.mesh, traj.values])[::2])
        series += [(name, "1:2", f"v1 ic{n}"), (name, "1:4", f"v2 ic{n}")]
    _gnuplot(out_dir / "figure.gp", f"c={c:g}, tau={tau:g}", "t", "v", series)


def _fig_bistability(out_dir: Path, p: Params, seed: int) -> None:
    _fig_probe(out_dir, p, seed, 0.325, 4.7756, [[0.1, 0.3, 0.4, 0.2], [1.0, 0.9, 0.8, 0.7]])


def _fig_region9(out_dir: Path, p: Params, seed: int) -> None:
    _fig_probe(out_dir, p, seed, 1.08, 3.9, [[1.3, 1.5, 1.4, 1.0], [0.0, 1.0, 0.0, 0.5], [0.05, 0.03, 0.04, 0.2]])


_FIGURE_RECIPES = {
    "instant-cascade": _fig_instant_cascade,
    "small-delay": _fig_small_delay,
    "trivial-hopf": _fig_trivial_hopf,
    "spectrum-sweep": _fig_spectrum_sweep,
    "delay-switching": _fig_delay_switching,
    "bistability": _fig_bistability,
    "nontrivial-hopf": _fig_nontrivial_hopf,
    "region-9": _fig_region9,
}


@cli.command("reproduce-figure")
@click.argument("figure_id", type=click.Choice(FIGURES))
@common
@guarded
def reproduce_figure(figure_id, config_path, out, seed, **kw):
    """Data and a gnuplot script for one of the standard diagrams."""
    cfg = resolve("reproduce-figure", config_path, _params_from(kw), {}, seed, out)
    cfg["figure"] = figure_id
    out_dir = _prepare(cfg)
    _FIGURE_RECIPES[figure_id](out_dir, cfg["_p"], cfg["rng_seed"])
    click.echo(json.dumps({"figure": figure_id, "output_dir": str(out_dir)}))


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
