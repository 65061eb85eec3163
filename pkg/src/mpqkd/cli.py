"""Command-line front end.

Every command writes a comma-separated table (header row, full-precision
numbers) to ``--out`` or stdout. ``--plot`` additionally renders a figure
for the commands that have one. Exit codes: 0 success, 2 usage or
validation error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import io
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import discrimination as disc
from .channels import ptm, random_kraus_channel, random_pauli_channel, y_flip
from .config import ConfigError, RunSpec, load_config, parse_protection, simulation_config
from .errors import InsufficientBits, NotDepolarizing, QkdError
from .protocol import AdConfig, ad_exact_stats, advantage_distillation, iid_records, pulses_for_sifted, run
from .security import THRESHOLDS, recompute_thresholds
from .twirl import default_protection, depolarizing_fit, expected_eta, isotropy_deviation, standard_2design, three_element_sets, twirl

log = logging.getLogger("mpqkd")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3


class RuntimeFailure(Exception):
    pass


# -- CSV ---------------------------------------------------------------------------


def fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(fmt(r[c]) for c in columns) + "\n")
    return buf.getvalue()


def emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# -- commands -------------------------------------------------------------------------


def cmd_twirl_check(spec: RunSpec, cfg: dict) -> tuple[list[dict], list[str]]:
    n_pauli = spec.params["n_pauli"]
    n_kraus = spec.params["n_kraus"]
    rng = np.random.default_rng(spec.params["seed"])
    paulis = [random_pauli_channel(rng) for _ in range(n_pauli)]
    rows = []
    for ts in three_element_sets():
        eta_err = dev = 0.0
        ok = True
        for c in paulis:
            tw = twirl(c, ts)
            d = isotropy_deviation(tw)[1]
            dev = max(dev, d)
            try:
                eta_err = max(eta_err, abs(depolarizing_fit(tw) - expected_eta(c)))
            except NotDepolarizing:
                ok = False
        rows.append(_twirl_row(ts, "pauli", n_pauli, eta_err, dev, ok))
    full = standard_2design()
    eta_err = dev = 0.0
    ok = True
    for _ in range(n_kraus):
        c = random_kraus_channel(rng)
        R = ptm(c).R
        tw = twirl(c, full)
        dev = max(dev, isotropy_deviation(tw)[1])
        try:
            eta_err = max(eta_err, abs(depolarizing_fit(tw) - (1 - np.trace(R[1:, 1:]) / 3)))
        except NotDepolarizing:
            ok = False
    rows.append(_twirl_row(full, "kraus", n_kraus, eta_err, dev, ok))
    cols = ["set", "kind", "channel_family", "n_channels", "max_eta_error", "max_deviation", "passed"]
    if not all(r["passed"] for r in rows):
        raise RuntimeFailure("twirl check failed for at least one set")
    return rows, cols


def _twirl_row(ts, family, n, eta_err, dev, ok, tol=1e-10):
    return {
        "set": "U" + "|U".join(str(i) for i in ts.labels),
        "kind": ts.kind,
        "channel_family": family,
        "n_channels": n,
        "max_eta_error": float(eta_err),
        "max_deviation": dev,
        "passed": ok and eta_err < tol and dev < tol,
    }


def cmd_discriminate(spec: RunSpec, cfg: dict) -> tuple[list[dict], list[str]]:
    pr = spec.params
    ens, meas = (disc.s2(), disc.m_z()) if pr["ensemble"] == "s2" else (disc.s0plus(), disc.m0plus())
    rows = []
    for p in np.linspace(pr["p_min"], pr["p_max"], pr["steps"]):
        p = float(p)
        c = y_flip(p)
        rows.append(
            {
                "p": p,
                "pguess_std": disc.helstrom_through(ens, c, False)[0],
                "pguess_mp": disc.guess_prob_through(ens, c, True, meas),
                "pguess_oracle_std": disc.brute_force_optimal(ens, c, False, pr["grid"]),
                "pguess_oracle_mp": disc.brute_force_optimal(ens, c, True, pr["grid"]),
            }
        )
    return rows, ["p", "pguess_std", "pguess_mp", "pguess_oracle_std", "pguess_oracle_mp"]


def _cell_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence((seed, index)).generate_state(1, np.uint64)[0])


def cmd_qber_sweep(spec: RunSpec, cfg: dict) -> tuple[list[dict], list[str]]:
    pr = spec.params
    base = pr["base"]
    prot_set = base.protection or default_protection()
    flags = {"both": (False, True), "on": (True,), "off": (False,)}[pr["protection"]]
    rows = []
    i = 0
    for p in pr["p"]:
        for loss in pr["loss_db"]:
            for protected in flags:
                sim = replace(base, channel=y_flip(p), loss_db=loss, protection=prot_set if protected else None, seed=_cell_seed(base.seed, i))
                sim = replace(sim, n_pulses=pulses_for_sifted(sim, pr["n_sifted"]))
                i += 1
                rep = run(sim)
                if rep.n_sifted == 0:
                    raise RuntimeFailure(f"no sifted bits at p={p}, loss={loss} dB")
                rows.append(
                    {
                        "p": float(p),
                        "loss_db": float(loss),
                        "protected": protected,
                        "qber_analytic": rep.analytic_qber,
                        "qber_mc": rep.qber_estimate,
                        "stderr": rep.qber_stderr,
                        "n_sifted": rep.n_sifted,
                    }
                )
    return rows, ["p", "loss_db", "protected", "qber_analytic", "qber_mc", "stderr", "n_sifted"]


def cmd_thresholds(spec: RunSpec, cfg: dict) -> tuple[list[dict], list[str]]:
    rec = recompute_thresholds()
    rows = []
    for name, stored in THRESHOLDS.items():
        r = rec[name]
        rows.append(
            {
                "name": name,
                "stored": stored,
                "recomputed": math.nan if r is None else r,
                "abs_diff": math.nan if r is None else abs(r - stored),
                "derived": r is not None,
            }
        )
    return rows, ["name", "stored", "recomputed", "abs_diff", "derived"]


def thresholds_text(rows: Sequence[dict]) -> str:
    lines = [f"{'threshold':<22}{'stored':>10}{'recomputed':>14}{'|diff|':>12}"]
    for r in rows:
        rec = "-" if not r["derived"] else f"{r['recomputed']:.6f}"
        diff = "-" if not r["derived"] else f"{r['abs_diff']:.2e}"
        lines.append(f"{r['name']:<22}{r['stored']:>10.4f}{rec:>14}{diff:>12}")
    return "\n".join(lines) + "\n"


SIM_COLUMNS = [
    "protocol_bb84",
    "p0",
    "px",
    "py",
    "pz",
    "protected",
    "twirl_size",
    "loss_db",
    "receiver_loss_db",
    "detector_efficiency",
    "dark_count_prob",
    "seed",
    "workers",
    "n_pulses",
    "n_detected",
    "n_sifted",
    "n_errors",
    "qber_estimate",
    "qber_stderr",
    "analytic_qber",
]


def cmd_simulate(spec: RunSpec, cfg: dict) -> tuple[list[dict], list[str]]:
    sim = spec.params["sim"]
    rep = run(sim)
    if rep.n_sifted == 0:
        raise RuntimeFailure("simulation produced no sifted bits")
    p0, px, py, pz = sim.channel.p
    row = {
        "protocol_bb84": sim.protocol == "bb84",
        "p0": p0,
        "px": px,
        "py": py,
        "pz": pz,
        "protected": sim.protection is not None,
        "twirl_size": 0 if sim.protection is None else len(sim.protection),
        "loss_db": sim.loss_db,
        "receiver_loss_db": sim.receiver_loss_db,
        "detector_efficiency": sim.detector_efficiency,
        "dark_count_prob": sim.dark_count_prob,
        "seed": sim.seed,
        "workers": sim.workers,
        **rep.as_row(),
    }
    return [row], SIM_COLUMNS


def cmd_distill(spec: RunSpec, cfg: dict) -> tuple[list[dict], list[str]]:
    pr = spec.params
    if pr["error_rate"] is not None:
        rng = np.random.default_rng(pr["seed"])
        records = iid_records(pr["error_rate"], pr["n_bits"], rng)
        eps = pr["error_rate"]
    else:
        rep = run(pr["sim"], keep_records=True)
        if rep.records is None or rep.n_sifted == 0:
            raise RuntimeFailure("simulation produced no sifted bits")
        records = rep.records
        eps = rep.qber_estimate
    rows = []
    for i, k in enumerate(pr["k"]):
        try:
            _, st = advantage_distillation(records, AdConfig(k), seed=_cell_seed(pr["seed"], i))
        except InsufficientBits as e:
            raise RuntimeFailure(str(e)) from None
        acc, err = ad_exact_stats(eps, k)
        rows.append(
            {
                "k": k,
                "input_error": eps,
                "n_bits": len(records),
                "n_blocks": st.n_blocks,
                "n_accepted": st.n_accepted,
                "acceptance_rate": st.acceptance_rate,
                "acceptance_exact": acc,
                "acceptance_stderr": st.acceptance_stderr,
                "post_error": st.post_error,
                "post_error_exact": err,
                "post_error_stderr": st.post_error_stderr,
            }
        )
    return rows, list(rows[0])


COMMANDS = {
    "twirl-check": cmd_twirl_check,
    "discriminate": cmd_discriminate,
    "qber-sweep": cmd_qber_sweep,
    "thresholds": cmd_thresholds,
    "simulate": cmd_simulate,
    "distill": cmd_distill,
}


# -- argument handling ------------------------------------------------------------------


def _floats(s: str) -> list[float]:
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def _ints(s: str) -> list[int]:
    try:
        return [int(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _grid(s: str) -> tuple[int, int]:
    try:
        a, b = s.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected THETAxPHI, e.g. 400x800, got {s!r}") from None


def _u64(s: str) -> int:
    v = int(s)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="key = value config file")
    common.add_argument("--seed", type=_u64, default=argparse.SUPPRESS)
    common.add_argument("--out", type=Path, default=argparse.SUPPRESS, help="CSV destination (default stdout)")
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    common.add_argument("--plot", type=Path, default=argparse.SUPPRESS, help="also render a figure to this file")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="mpqkd", description="Measurement-protected QKD simulations.", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("twirl-check", parents=[common], help="verify that twirling yields depolarizing channels")
    p.add_argument("--n-pauli", type=int, default=500)
    p.add_argument("--n-kraus", type=int, default=200)

    p = sub.add_parser("discriminate", parents=[common], help="guessing probabilities over a Y-flip channel")
    p.add_argument("--p-min", type=float)
    p.add_argument("--p-max", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--ensemble", choices=["s2", "s0plus"])
    p.add_argument("--grid", type=_grid, default=disc.DEFAULT_GRID)

    p = sub.add_parser("qber-sweep", parents=[common], help="Monte Carlo and analytic QBER versus loss")
    p.add_argument("--p", type=_floats, help="Y-flip probabilities, comma separated")
    p.add_argument("--loss-db", type=_floats)
    p.add_argument("--protection", choices=["both", "on", "off"])
    p.add_argument("--n-sifted", type=int, default=100_000)
    _detection_args(p)

    sub.add_parser("thresholds", parents=[common], help="stored and recomputed security thresholds")

    p = sub.add_parser("simulate", parents=[common], help="one Monte Carlo run")
    p.add_argument("--protocol", choices=["bb84", "two-state"])
    p.add_argument("--p", type=float, help="Y-flip probability")
    p.add_argument("--loss-db", type=float)
    p.add_argument("--protection", help="none, default, full or design indices like 1,5,9")
    p.add_argument("--n-pulses", type=int)
    p.add_argument("--n-sifted", type=int)
    _detection_args(p)

    p = sub.add_parser("distill", parents=[common], help="advantage distillation statistics")
    p.add_argument("--k", type=_ints)
    p.add_argument("--error-rate", type=float, help="use i.i.d. bits with this error rate instead of a simulation")
    p.add_argument("--n-bits", type=int)
    p.add_argument("--p", type=float, help="Y-flip probability for the simulated source")
    p.add_argument("--protection")
    p.add_argument("--n-sifted", type=int)
    _detection_args(p)
    return parser


def _detection_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--receiver-loss-db", type=float)
    p.add_argument("--efficiency", type=float)
    p.add_argument("--dark-count-prob", type=float)


def _pick(cli_value, section: dict, key: str, default):
    if cli_value is not None:
        return cli_value
    return section.get(key, default)


def make_runspec(args: argparse.Namespace) -> tuple[RunSpec, dict]:
    """Merge config file and flags into a validated RunSpec (flags win)."""
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    seed = getattr(args, "seed", None)
    if seed is None:
        seed = cfg.get("run", {}).get("seed", 0)
    workers = getattr(args, "workers", None)
    if workers is not None and workers < 1:
        raise ConfigError("workers must be at least 1", key="workers")
    out = getattr(args, "out", None)
    cmd = args.command
    params: dict[str, Any] = {"seed": seed}

    def sim_overrides(**extra):
        o = {
            "seed": seed,
            "workers": workers,
            "receiver_loss_db": getattr(args, "receiver_loss_db", None),
            "efficiency": getattr(args, "efficiency", None),
            "dark_count_prob": getattr(args, "dark_count_prob", None),
        }
        o.update(extra)
        for k in ("receiver_loss_db",):
            if o[k] is not None and o[k] < 0:
                raise ConfigError(f"{k} must be nonnegative", key=k)
        for k in ("efficiency", "dark_count_prob"):
            if o[k] is not None and not 0 <= o[k] <= 1:
                raise ConfigError(f"{k} must lie in [0, 1]", key=k)
        return o

    if cmd == "twirl-check":
        if args.n_pauli < 1 or args.n_kraus < 1:
            raise ConfigError("channel counts must be positive", key="n_pauli")
        params.update(n_pauli=args.n_pauli, n_kraus=args.n_kraus)
    elif cmd == "discriminate":
        sec = cfg.get("discriminate", {})
        params.update(
            p_min=_pick(args.p_min, sec, "p_min", 0.0),
            p_max=_pick(args.p_max, sec, "p_max", 0.5),
            steps=_pick(args.steps, sec, "steps", 51),
            ensemble=_pick(args.ensemble, sec, "ensemble", "s2"),
            grid=args.grid,
        )
        if not 0 <= params["p_min"] <= params["p_max"] <= 0.5:
            raise ConfigError(f"need 0 <= p_min <= p_max <= 0.5, got [{params['p_min']}, {params['p_max']}]", key="p_min")
        if params["steps"] < 1:
            raise ConfigError("steps must be at least 1", key="steps")
        if params["ensemble"] not in ("s2", "s0plus"):
            raise ConfigError(f"unknown ensemble {params['ensemble']!r}", key="ensemble")
        if params["grid"][0] * params["grid"][1] < 10_000 or min(params["grid"]) < 2:
            raise ConfigError("oracle grid needs at least 1e4 points", key="grid")
    elif cmd == "qber-sweep":
        sec = cfg.get("sweep", {})
        ps = _pick(args.p, sec, "p", None)
        if ps is None:
            ps = [cfg.get("channel", {}).get("p", 0.1)]
        losses = _pick(args.loss_db, sec, "loss_db", [10.0, 20.0, 30.0])
        prot = _pick(args.protection, sec, "protection", "both")
        if prot not in ("both", "on", "off"):
            raise ConfigError(f"protection must be both, on or off, got {prot!r}", key="protection")
        if not ps or any(not 0 <= p <= 0.5 for p in ps):
            raise ConfigError("Y-flip probabilities must lie in [0, 0.5]", key="p")
        if not losses or any(v < 0 for v in losses):
            raise ConfigError("loss_db values must be nonnegative", key="loss_db")
        if args.n_sifted < 1:
            raise ConfigError("n_sifted must be at least 1", key="n_sifted")
        base = simulation_config(cfg, sim_overrides())
        params.update(p=ps, loss_db=losses, protection=prot, n_sifted=args.n_sifted, base=base)
    elif cmd == "simulate":
        ov = sim_overrides(
            protocol=args.protocol,
            loss_db=args.loss_db,
            protection=args.protection,
            n_pulses=args.n_pulses,
            n_sifted=args.n_sifted,
        )
        if args.p is not None:
            ov.update(p=args.p)
            cfg = {**cfg, "channel": {"kind": "y_flip"}}
        _check_counts(ov)
        params["sim"] = simulation_config(cfg, ov)
    elif cmd == "distill":
        sec = cfg.get("distill", {})
        params["k"] = _pick(args.k, sec, "k", [1, 3, 5, 8])
        if not params["k"] or min(params["k"]) < 1:
            raise ConfigError("block sizes k must be at least 1", key="k")
        params["error_rate"] = _pick(args.error_rate, sec, "error_rate", None)
        params["n_bits"] = _pick(args.n_bits, sec, "n_bits", 1_000_000)
        if params["error_rate"] is not None and not 0 <= params["error_rate"] <= 1:
            raise ConfigError("error_rate must lie in [0, 1]", key="error_rate")
        if params["n_bits"] < 1:
            raise ConfigError("n_bits must be at least 1", key="n_bits")
        if params["error_rate"] is None:
            ov = sim_overrides(protection=args.protection, n_sifted=args.n_sifted)
            if args.p is not None:
                ov.update(p=args.p)
                cfg = {**cfg, "channel": {"kind": "y_flip"}}
            _check_counts(ov)
            params["sim"] = simulation_config(cfg, ov)
    return RunSpec(cmd, params, out), cfg


def _check_counts(ov: dict) -> None:
    for k in ("n_pulses", "n_sifted"):
        if ov.get(k) is not None and ov[k] < 1:
            raise ConfigError(f"{k} must be at least 1", key=k)
    if ov.get("p") is not None and not 0 <= ov["p"] <= 0.5:
        raise ConfigError("p must lie in [0, 0.5]", key="p")


def _plot(spec: RunSpec, rows, path: Path) -> None:
    from . import plotting

    if spec.command == "discriminate":
        plotting.plot_guessing(rows, path, spec.params["ensemble"])
    elif spec.command == "qber-sweep":
        plotting.plot_qber_sweep(rows, path)
    elif spec.command == "thresholds":
        plotting.plot_thresholds(rows, path)
    else:
        raise ConfigError(f"no figure is defined for {spec.command}", key="plot")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING, format="%(levelname)s %(message)s")
    plot_path = getattr(args, "plot", None)
    try:
        spec, cfg = make_runspec(args)
        if plot_path is not None and spec.command not in ("discriminate", "qber-sweep", "thresholds"):
            raise ConfigError(f"no figure is defined for {spec.command}", key="plot")
    except QkdError as e:
        print(f"mpqkd: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        rows, cols = COMMANDS[spec.command](spec, cfg)
    except (RuntimeFailure, QkdError) as e:
        print(f"mpqkd: {spec.command} failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    csv_text = to_csv(rows, cols)
    if spec.command == "thresholds":
        sys.stdout.write(thresholds_text(rows))
        if spec.output_path is not None:
            emit(csv_text, spec.output_path)
    else:
        emit(csv_text, spec.output_path)
    if plot_path is not None:
        _plot(spec, rows, plot_path)
        log.info("figure written to %s", plot_path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
