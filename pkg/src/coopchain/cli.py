"""Command-line driver: ``coopchain <subcommand> [options]``.

Exit codes: 0 success, 2 usage/domain error, 3 numerical failure.
A JSON ``--config`` file may supply any option (keys are the option
names with dashes replaced by underscores); explicit flags win.
"""

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analysis import DecayFitReport, analyze_dm, analyze_trace, scan_lowest_decay
from .errors import DomainError, NumericalFailure
from .geometry import ChainGeometry
from .interaction import build_coupling_matrix, coupling_strengths, f_kernel, g_kernel
from .lab_planner import (
    StarkConstants,
    ZEEMAN_CONSTANT,
    apply_phase_error,
    apply_phase_noise,
    robustness_report,
    stark_plan,
    zeeman_plan,
)
from .output import read_csv, write_csv, write_json, write_raw_json
from .spectral_dynamics import (
    diagonalize,
    ode_oracle,
    population,
    population_trace,
    weightings,
)
from .states import dm_state, make_state

log = logging.getLogger("coopchain")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
VERIFY_TOL = 1e-8

_NOT_CONFIG = {"func", "config", "log_level"}


class UsageError(DomainError):
    pass


@dataclass
class RunConfig:
    """Everything needed to reproduce a run; echoed into every output file."""

    command: str
    params: dict = field(default_factory=dict)

    @classmethod
    def from_namespace(cls, ns):
        params = {k: v for k, v in sorted(vars(ns).items()) if k not in _NOT_CONFIG and k != "command"}
        return cls(ns.command, params)

    def to_dict(self):
        return {"command": self.command, "version": __version__, **self.params}


def parse_float(text):
    """Float that also accepts multiples of pi: ``0.2pi``, ``pi``, ``-pi/2``."""
    s = str(text).strip().lower().replace(" ", "")
    if "pi" in s:
        head, _, tail = s.partition("pi")
        coeff = 1.0 if head in ("", "+") else -1.0 if head == "-" else float(head.rstrip("*"))
        value = coeff * math.pi
        if tail:
            if not tail.startswith("/"):
                raise argparse.ArgumentTypeError(f"cannot parse {text!r}")
            value /= float(tail[1:])
        return value
    try:
        return float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse {text!r}") from None


def parse_list(text, kind=float):
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [x for x in str(text).split(",") if x.strip()]
    if not items:
        raise UsageError("empty list")
    if kind is int:
        return [int(x) for x in items]
    return [parse_float(x) for x in items]


def _window(text):
    if text is None:
        return None
    lo, hi = parse_list(text)
    return (lo, hi)


def _add_geometry(p, need_m=False):
    p.add_argument("--n", type=int, help="number of atoms N")
    p.add_argument("--spacing", type=float, help="lattice spacing in units of lambda")
    p.add_argument("--alignment", type=float, default=0.0, help="(d . r_hat)^2, default 0")
    p.add_argument(
        "--axial-excitation",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="excitation pulse travels along the chain (default: yes)",
    )
    if need_m:
        p.add_argument("--m", type=int, help="DM state index")


def _out(p, default="-"):
    p.add_argument("--out", default=default, help="output path ('-' for stdout)")


def build_parser():
    parser = argparse.ArgumentParser(prog="coopchain", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"coopchain {__version__}")
    parser.add_argument("--config", help="JSON file with default option values")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel", help="evaluate the F and G kernels")
    p.add_argument("--xi", type=float)
    p.add_argument("--alignment", type=float, default=0.0)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("coupling", help="coupling strengths Gamma_mm of DM states")
    _add_geometry(p, need_m=True)
    p.add_argument("--scan-m", action="store_true", help="all m (default when --m is absent)")
    _out(p)
    p.set_defaults(func=cmd_coupling)

    p = sub.add_parser("state", help="write a state's site amplitudes as JSON")
    _add_geometry(p, need_m=True)
    p.add_argument("--family", choices=["dm", "dicke", "mazets", "svidzinsky"], default="dm")
    _out(p)
    p.set_defaults(func=cmd_state)

    p = sub.add_parser("spectrum", help="eigenvalues of the coupling matrix")
    _add_geometry(p)
    _out(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("weights", help="eigenmode weightings of a DM state")
    _add_geometry(p, need_m=True)
    p.add_argument("--offset", type=parse_float, default=0.0, help="phase-ramp error, e.g. 0.2pi")
    p.add_argument("--threshold", type=float, default=0.98)
    _out(p)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("evolve", help="time trace of a DM state")
    _add_geometry(p, need_m=True)
    p.add_argument("--family", choices=["dm", "dicke", "mazets", "svidzinsky"], default="dm",
                   help="initial state family (projection is always on DM state m)")
    p.add_argument("--offset", type=parse_float, default=0.0)
    p.add_argument("--tmax", type=float, help="final time in 1/Gamma (default: 5 / Gamma_est)")
    p.add_argument("--points", type=int, default=2001)
    p.add_argument("--fit-window", help="lo,hi envelope window for the embedded fit")
    p.add_argument("--verify", action="store_true", help="cross-check with the ODE integrator")
    _out(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("fit", help="fit decay and beat of a trajectory CSV")
    p.add_argument("--in", dest="infile")
    p.add_argument("--fit-window")
    _out(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sweep", help="lowest fitted decay over (N, d_s)")
    p.add_argument("--n-list")
    p.add_argument("--spacing-list")
    p.add_argument("--alignment", type=float, default=0.0)
    p.add_argument("--axial-excitation", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    _out(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plan", help="phase-imprinting field plan")
    _add_geometry(p, need_m=True)
    p.add_argument("--mechanism", choices=["zeeman", "stark-cw", "stark-pulsed"], default="zeeman")
    p.add_argument("--tau", type=float, help="interaction time in seconds")
    p.add_argument("--detuning", type=float, help="CW detuning in linewidths")
    p.add_argument("--zeeman-constant", type=float, default=ZEEMAN_CONSTANT)
    p.add_argument("--pulsed-wavelength", type=float, default=StarkConstants().pulsed_wavelength_nm,
                   help="pulsed laser wavelength in nm")
    _out(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("perturb", help="phase-error robustness table")
    _add_geometry(p, need_m=True)
    p.add_argument("--offsets", default="0,0.2pi,0.4pi")
    p.add_argument("--subset-size", type=int, default=2)
    p.add_argument("--noise-sigma", type=float, default=0.0, help="extra random per-site phase noise")
    p.add_argument("--seed", type=int)
    _out(p)
    p.set_defaults(func=cmd_perturb)

    return parser


def _require(ns, *names):
    missing = [n for n in names if getattr(ns, n, None) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"missing required option(s): {flags}")


def _geom(ns):
    _require(ns, "n", "spacing")
    return ChainGeometry(ns.n, ns.spacing, ns.alignment, ns.axial_excitation)


def cmd_kernel(ns, cfg):
    _require(ns, "xi")
    f = f_kernel(ns.xi, ns.alignment)
    g = g_kernel(ns.xi, ns.alignment)
    print(f"F {f!r}")
    print(f"G {g!r}")


def cmd_coupling(ns, cfg):
    geom = _geom(ns)
    gam = coupling_strengths(geom)
    ms = range(1, geom.n_atoms + 1) if (ns.scan_m or ns.m is None) else [ns.m]
    for m in ms:
        if not 1 <= m <= geom.n_atoms:
            raise DomainError(f"m={m} outside 1..{geom.n_atoms}")
    write_csv(ns.out, ["m", "gamma_mm"], [(m, gam[m - 1]) for m in ms], cfg)


def cmd_state(ns, cfg):
    geom = _geom(ns)
    state = make_state(ns.family, geom, ns.m)
    write_raw_json(ns.out, state.as_pairs())


def cmd_spectrum(ns, cfg):
    decomp = diagonalize(build_coupling_matrix(_geom(ns)))
    rows = [
        (i + 1, lam.real, lam.imag, g)
        for i, (lam, g) in enumerate(zip(decomp.eigenvalues, decomp.decay_constants))
    ]
    write_csv(
        ns.out,
        ["n", "re_lambda", "im_lambda", "decay_constant"],
        rows,
        cfg,
        {"residual": decomp.reconstruction_residual, "condition": decomp.condition},
    )


def _prepared(geom, ns):
    state = make_state(getattr(ns, "family", "dm"), geom, ns.m)
    if ns.offset:
        state = apply_phase_error(state, ns.offset)
    return state


def cmd_weights(ns, cfg):
    geom = _geom(ns)
    _require(ns, "m")
    decomp = diagonalize(build_coupling_matrix(geom))
    table = weightings(decomp, _prepared(geom, ns), threshold=ns.threshold)
    rows = [
        (i + 1, v.real, v.imag, w.real, w.imag, nw)
        for i, (v, w, nw) in enumerate(zip(table.v, table.w, table.normalized_weighting))
    ]
    extra = {
        "dominant_subset": [i + 1 for i in table.dominant_subset],
        "dominant_weight": table.subset_weight(table.dominant_subset),
    }
    write_csv(ns.out, ["n", "v_re", "v_im", "w_re", "w_im", "normalized_weighting"], rows, cfg, extra)


def cmd_evolve(ns, cfg):
    geom = _geom(ns)
    if ns.m is None:
        ns.m = geom.n_atoms if ns.family == "dicke" else None
    _require(ns, "m")
    matrix = build_coupling_matrix(geom)
    decomp = diagonalize(matrix)
    state = _prepared(geom, ns)
    times = None
    if ns.tmax is not None:
        if ns.tmax <= 0 or ns.points < 5:
            raise UsageError("--tmax must be positive and --points >= 5")
        times = np.linspace(0.0, ns.tmax, ns.points)
    times, d, report = analyze_dm(geom, ns.m, decomp=decomp, state=state, times=times,
                                  window=_window(ns.fit_window))
    pop = population_trace(decomp, state, times)
    prob = np.abs(d) ** 2

    extra = {"report": report.to_dict()}
    if ns.verify:
        deviation = verify_against_oracle(matrix, state, times, dm_state(geom, ns.m), d, pop)
        extra["verify_max_relative_deviation"] = deviation

    rows = zip(times, d.real, d.imag, prob, pop)
    write_csv(ns.out, ["t", "re_d", "im_d", "prob", "population"], rows, cfg, extra)


def verify_against_oracle(matrix, state, times, phi, d, pop):
    c = ode_oracle(matrix, state, times)
    d_ode = c @ phi.amps.conj()
    scale = max(float(np.max(np.abs(d_ode))), 1e-300)
    dev = float(np.max(np.abs(d - d_ode)) / scale)
    dev = max(dev, float(np.max(np.abs(pop - population(c)))))
    if dev > VERIFY_TOL:
        raise NumericalFailure(f"spectral and ODE evolution differ by {dev:.3e} (> {VERIFY_TOL})")
    return dev


def cmd_fit(ns, cfg):
    _require(ns, "infile")
    meta, columns, data = read_csv(ns.infile)
    if "t" not in data or "prob" not in data:
        raise UsageError("trajectory needs 't' and 'prob' columns")
    report = analyze_trace(data["t"], data["prob"], window=_window(ns.fit_window))
    embedded = meta.get("report") or {}
    for key in ("spectral_beat", "dominant_weighting", "m_star"):
        setattr(report, key, embedded.get(key))
    write_json(ns.out, {"report": report.to_dict(), "source": ns.infile}, cfg)


def cmd_sweep(ns, cfg):
    _require(ns, "n_list", "spacing_list")
    n_list = parse_list(ns.n_list, int)
    spacing_list = parse_list(ns.spacing_list)
    rows = scan_lowest_decay(n_list, spacing_list, ns.alignment, ns.axial_excitation, ns.workers)
    write_csv(
        ns.out,
        ["n", "spacing", "m_star", "gamma_f", "spread"],
        [(r.n, r.spacing, r.m_star, r.gamma_f, r.spread) for r in rows],
        cfg,
    )


def cmd_plan(ns, cfg):
    geom = _geom(ns)
    _require(ns, "m", "tau")
    if ns.mechanism == "zeeman":
        plan = zeeman_plan(geom, ns.m, ns.tau * 1e3, constant=ns.zeeman_constant)
    else:
        constants = StarkConstants(pulsed_wavelength_nm=ns.pulsed_wavelength)
        plan = stark_plan(
            geom, ns.m, ns.tau, detuning_gamma=ns.detuning,
            pulsed=ns.mechanism == "stark-pulsed", constants=constants,
        )
    write_json(ns.out, {"plan": plan.to_dict()}, cfg)


def cmd_perturb(ns, cfg):
    geom = _geom(ns)
    _require(ns, "m")
    offsets = parse_list(ns.offsets)
    rows = robustness_report(geom, ns.m, offsets, ns.subset_size, ns.noise_sigma, ns.seed)
    write_csv(
        ns.out,
        ["offset", "subset_projection", "gamma_f", "spread", "beat_error"],
        [(r.offset, r.subset_projection, r.gamma_f, r.spread, r.beat_error) for r in rows],
        cfg,
        {"windows": [list(r.window) for r in rows]},
    )


def _load_config(argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    with open(known.config) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        defaults = _load_config(argv)
    except (OSError, json.JSONDecodeError, UsageError) as exc:
        print(f"coopchain: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if defaults:
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        for sp in subparsers.choices.values():
            known = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in defaults.items() if k in known})
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=getattr(logging, str(ns.log_level).upper(), logging.WARNING))

    cfg = RunConfig.from_namespace(ns).to_dict()
    try:
        ns.func(ns, cfg)
    except (DomainError, argparse.ArgumentTypeError, ValueError) as exc:
        print(f"coopchain: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"coopchain: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
