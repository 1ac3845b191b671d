"""Command line front end: verify, simulate, convert.

``verify`` runs the registered identity suite on two lattices and
writes ``report.json``; ``simulate`` integrates a scenario and writes
``trajectory.csv``; ``convert`` maps a serialized stress field across
the representation web.  All inputs are JSON; outputs are JSON/CSV so
runs diff cleanly and plots need no extra tooling.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .grid import build_grid
from .geometry import ambient_metric_at, make_metric
from .config import MOTION_LIBRARY, MotionCurve, induced_metrics
from .masskinetics import MassStructure
from .stress import ConstitutiveModel, NEO_HOOKEAN, SVK, StressState, WebContext, stress_web_convert
from .dynamics import (
    ElasticSystem,
    SimulationError,
    material_energies,
    run_material,
    spatial_residuals,
)
from .fieldio import chart_from_dict, grid_from_dict, load_field, save_field, write_csv
from .harness import run_identity_suite

MODEL_KINDS = {"svk": SVK, "neo_hookean": NEO_HOOKEAN}


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _model_from_dict(data):
    kind = MODEL_KINDS.get(data.get("model", "svk"))
    if kind is None:
        raise SystemExit(f"unknown model {data.get('model')!r}; choose from {sorted(MODEL_KINDS)}")
    return ConstitutiveModel(kind, float(data.get("lambda", 2.0)), float(data.get("mu", 1.0)))


def _scenario_system(cfg):
    grid = grid_from_dict(cfg)
    chart = grid.chart
    ref = make_metric("reference", ambient_metric_at(chart, grid.nodes()))
    density = cfg.get("density", 1.0)
    if isinstance(density, str):
        x = grid.nodes()
        namespace = {"X1": x[..., 0], "X2": x[..., 1], "X3": x[..., 2], "np": np,
                     "sin": np.sin, "cos": np.cos, "exp": np.exp, "pi": np.pi}
        density = eval(density, {"__builtins__": {}}, namespace)  # noqa: S307 - documented scenario hook
    mass = MassStructure.from_density(grid, ref, density)
    model = _model_from_dict(cfg.get("model", {}))
    sys_ = ElasticSystem(grid, chart, model, mass, bc=cfg.get("bc", "zero_traction"))
    return sys_


def _initial_velocity(cfg, grid, seed):
    spec = cfg.get("initial_velocity", {"kind": "bump", "amplitude": 0.02})
    x = grid.nodes()
    kind = spec.get("kind", "bump")
    amp = float(spec.get("amplitude", 0.02))
    if kind == "zero":
        return np.zeros(grid.shape + (3,))
    if kind == "uniform":
        return np.broadcast_to(np.asarray(spec.get("direction", (1.0, 0.0, 0.0))) * amp,
                               grid.shape + (3,)).copy()
    if kind == "bump":
        return np.stack([
            amp * np.sin(np.pi * x[..., 0]) * np.cos(np.pi * x[..., 1]),
            amp * np.sin(np.pi * x[..., 1]) * np.cos(np.pi * x[..., 2]),
            amp * np.sin(np.pi * x[..., 2]) * np.cos(np.pi * x[..., 0]),
        ], axis=-1)
    if kind == "random":
        from .fieldgen import smooth_vector

        rng = np.random.default_rng(seed)
        return amp * smooth_vector(grid, rng)
    raise SystemExit(f"unknown initial velocity kind {kind!r}")


def cmd_verify(args):
    cfg = _load_json(args.config) if args.config else {}
    resolution = args.resolution or int(cfg.get("resolution", 9))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    names = cfg.get("checks")
    os.makedirs(args.out, exist_ok=True)

    def progress(outcome):
        print(outcome.row())

    report = run_identity_suite(resolution=resolution, seed=seed, names=names,
                                progress=progress)
    out_path = os.path.join(args.out, "report.json")
    with open(out_path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
    n_pass = sum(o.passed for o in report.outcomes)
    print(f"{n_pass}/{len(report.outcomes)} checks passed; report written to {out_path}")
    return 0 if report.passed else 1


def cmd_simulate(args):
    cfg = _load_json(args.config) if args.config else {}
    if args.resolution:
        cfg["resolution"] = [args.resolution] * 3
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    sys_ = _scenario_system(cfg)
    grid = sys_.grid
    dt = float(cfg.get("dt", 0.01))
    t_end = float(cfg.get("t_end", 1.0))
    n_steps = max(1, int(round(t_end / dt)))
    v0 = _initial_velocity(cfg, grid, seed)
    g_tilde0 = ambient_metric_at(sys_.ambient_chart, grid.nodes())
    m0 = np.einsum("...ij,...j->...i", g_tilde0, v0) * sys_.mass.mu_hat.density[..., None]
    os.makedirs(args.out, exist_ok=True)
    try:
        states = run_material(sys_, grid.nodes().copy(), m0, dt, n_steps)
    except SimulationError as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return 2

    energies = [material_energies(s, sys_) for s in states]
    totals = [ek + ei for ek, ei, _ in energies]
    columns = {
        "t": [s.t for s in states],
        "e_kin": [e[0] for e in energies],
        "e_int": [e[1] for e in energies],
        "boundary_power": [e[2] for e in energies],
        "energy_residual": [],
        "mass_residual": [],
        "min_detF": [],
    }
    for idx, state in enumerate(states):
        cfg_t = sys_.configuration(state.phi, state.t)
        columns["min_detF"].append(float(cfg_t.det_f.min()))
        if 0 < idx < len(states) - 1:
            rate = (totals[idx + 1] - totals[idx - 1]) / (2.0 * dt)
            columns["energy_residual"].append(abs(rate - energies[idx][2]))
            mres, _ = spatial_residuals(sys_, states[idx - 1: idx + 2])
            columns["mass_residual"].append(mres)
        else:
            columns["energy_residual"].append(0.0)
            columns["mass_residual"].append(0.0)
    csv_path = os.path.join(args.out, "trajectory.csv")
    write_csv(csv_path, columns)

    scale = max(max(abs(t) for t in totals), 1e-30)
    worst = max(columns["energy_residual"]) / scale
    summary = {
        "steps": n_steps,
        "dt": dt,
        "e_total_initial": totals[0],
        "e_total_final": totals[-1],
        "max_energy_residual_rel": worst,
        "min_detF": min(columns["min_detF"]),
    }
    with open(os.path.join(args.out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    print(f"trajectory written to {csv_path}; max relative energy residual {worst:.3e}")
    threshold = float(cfg.get("energy_residual_threshold", 1e-3))
    return 0 if worst <= threshold else 3


WEB_TAGS = {"extensive", "bare", "mass"}
REP_TAGS = {"spatial", "material", "convective"}


def _parse_tag(tag):
    try:
        rep, weight = tag.split(":")
    except ValueError as exc:
        raise SystemExit(f"tags look like representation:weight, got {tag!r}") from exc
    if rep not in REP_TAGS or weight not in WEB_TAGS:
        raise SystemExit(f"unknown tag {tag!r}")
    return rep, weight


def cmd_convert(args):
    ctx_cfg = _load_json(args.context)
    grid = grid_from_dict(ctx_cfg)
    chart = grid.chart
    motion_cfg = ctx_cfg.get("motion", {"name": "dilation", "params": {"rate": 1.0}})
    maker = MOTION_LIBRARY.get(motion_cfg.get("name"))
    if maker is None:
        raise SystemExit(f"unknown motion {motion_cfg.get('name')!r}")
    curve = MotionCurve(grid, chart, maker(**motion_cfg.get("params", {})))
    cfg_t = curve.configuration(float(ctx_cfg.get("t", 0.0)))
    ref = curve.reference_metric()
    mass = MassStructure.from_density(grid, ref, ctx_cfg.get("density", 1.0))
    g_hat, g_tilde = induced_metrics(cfg_t)
    web = WebContext(cfg_t, mass, g_hat=g_hat, g_tilde=g_tilde)

    values, meta = load_field(args.input, grid=grid)
    from_rep, from_weight = _parse_tag(args.from_tag)
    to_rep, to_weight = _parse_tag(args.to_tag)
    if from_weight == "extensive":
        from .forms import BundleValuedForm

        payload = BundleValuedForm(2, "covector", from_rep, "pseudo", values,
                                   over_map=cfg_t if from_rep == "material" else None)
    else:
        payload = values
    state = StressState(from_rep, from_weight, payload)
    out = stress_web_convert(state, to_rep, to_weight, web)
    out_values = out.payload.comps if to_weight == "extensive" else out.payload
    save_field(args.output, out_values, grid,
               representation=to_rep, weight=to_weight, kind="stress")
    print(f"converted {args.from_tag} -> {args.to_tag}; wrote {args.output}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="elastiforms",
        description="verification kernel for exterior-calculus nonlinear elasticity",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run the identity suite")
    p_verify.add_argument("--config", help="JSON file with resolution/seed/checks")
    p_verify.add_argument("--out", default="out", help="output directory")
    p_verify.add_argument("--resolution", type=int, help="coarse lattice nodes per axis")
    p_verify.add_argument("--seed", type=int, help="random field seed")
    p_verify.set_defaults(func=cmd_verify)

    p_sim = sub.add_parser("simulate", help="integrate a scenario")
    p_sim.add_argument("--config", required=True, help="scenario JSON")
    p_sim.add_argument("--out", default="out", help="output directory")
    p_sim.add_argument("--resolution", type=int, help="override lattice resolution")
    p_sim.add_argument("--seed", type=int, help="random initial-data seed")
    p_sim.set_defaults(func=cmd_simulate)

    p_conv = sub.add_parser("convert", help="convert a stress field between web entries")
    p_conv.add_argument("--input", required=True, help="field JSON file")
    p_conv.add_argument("--from", dest="from_tag", required=True,
                        help="source tag, e.g. spatial:mass")
    p_conv.add_argument("--to", dest="to_tag", required=True,
                        help="target tag, e.g. material:mass")
    p_conv.add_argument("--context", required=True,
                        help="JSON with chart/resolution/motion/t/density")
    p_conv.add_argument("--output", default="converted.json", help="output field file")
    p_conv.set_defaults(func=cmd_convert)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
