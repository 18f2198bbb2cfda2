"""Command-line entry point: run an experiment, write CSV traces and a summary.

    heavyball phase  [--seed 0] [--beta 0,0.3,0.5,0.7,0.9,1->0.9] [--out DIR]
    heavyball cubic  [--delta 0.1] [--perturb-b]
    heavyball saddle
    heavyball eig    [--eta 1e-2,5e-3,1e-3,5e-4]
    heavyball lemmas
    heavyball gradcheck

Settings come from built-in defaults, then an optional ``--config`` file of
``key=value`` lines, then ``--set key=value`` and the dedicated flags. The
output directory defaults to ``$HEAVYBALL_OUT`` or ``./heavyball_out``.

Each experiment writes ``<experiment>_summary.txt`` (``key=value`` lines) and,
except for lemmas and gradcheck, one CSV per momentum setting. The exit status
is 0 when every check listed in the summary passes, 1 when one fails and 2 on a
usage error.
"""

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dynamics, gradcheck, sweeps
from .cubic import check_optimality
from .numkit import Rng

log = logging.getLogger(__name__)

ENV_OUT = "HEAVYBALL_OUT"
DEFAULT_OUT = "heavyball_out"
EXPERIMENTS = ("phase", "cubic", "saddle", "eig", "lemmas", "gradcheck")


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _csv_list(text):
    return tuple(tok.strip() for tok in str(text).split(",") if tok.strip())


def _float_list(text):
    return tuple(float(tok) for tok in _csv_list(text))


COMMON = {"seed": int, "beta": _csv_list, "T": int, "out": str}

# Defaults per experiment; the value types double as parsers for config text.
DEFAULTS = {
    "phase": dict(eta=5e-4, beta=sweeps.PHASE_BETAS, T=12000, d=10, n=200, zeta=0.1),
    "cubic": dict(eta=0.01, beta=sweeps.CUBIC_BETAS, T=4000, d=4, rho=1.0, norm_wstar=1.0,
                  normA=1.0, gamma=0.2, gap=5e-3, r=1e-3, delta=0.1, perturb_b=False),
    "saddle": dict(eta=0.01, beta=sweeps.SADDLE_BETAS, T=6000, n=10, drop=0.01),
    "eig": dict(eta=sweeps.EIG_ETAS, beta=sweeps.EIG_BETAS, T=200000, d=10, tol=1e-3),
    "lemmas": dict(trials=10000, max_T=200),
    "gradcheck": dict(problem=gradcheck.PROBLEMS, count=100, h=1e-6, tol=1e-5),
}

PARSERS = {
    "eta": float, "d": int, "n": int, "zeta": float, "rho": float, "norm_wstar": float,
    "normA": float, "gamma": float, "gap": float, "r": float, "delta": float,
    "perturb_b": _bool, "drop": float, "tol": float, "trials": int, "max_T": int,
    "problem": _csv_list, "count": int, "h": float,
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    out: str | None = None
    params: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.params[key]

    def out_dir(self):
        return Path(self.out or os.environ.get(ENV_OUT) or DEFAULT_OUT)


def allowed_keys(experiment):
    keys = set(DEFAULTS[experiment]) | {"seed", "out", "experiment"}
    if experiment not in ("lemmas", "gradcheck"):
        keys |= {"beta", "T"}
    return keys


def parse_value(experiment, key, text):
    if key not in allowed_keys(experiment):
        raise ConfigError(f"unknown key {key!r} for experiment {experiment!r}")
    if key == "experiment":
        if text.strip() != experiment:
            raise ConfigError(f"config is for experiment {text.strip()!r}, not {experiment!r}")
        return experiment
    if key == "eta" and experiment == "eig":
        return _float_list(text)
    parser = PARSERS.get(key) or COMMON[key]
    try:
        return parser(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {text!r} ({exc})") from None


def read_config_file(path, experiment):
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, text = (s.strip() for s in line.split("=", 1))
        values[key] = parse_value(experiment, key, text)
    return values


def build_config(experiment, overrides=None, config_file=None):
    """Defaults, then the config file, then `overrides` (raw strings or values)."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    merged = dict(DEFAULTS[experiment])
    merged["seed"] = 0
    merged["out"] = None
    if config_file is not None:
        merged.update(read_config_file(config_file, experiment))
    for key, value in (overrides or {}).items():
        if key not in allowed_keys(experiment):
            raise ConfigError(f"unknown key {key!r} for experiment {experiment!r}")
        merged[key] = parse_value(experiment, key, value) if isinstance(value, str) else value
    merged.pop("experiment", None)
    seed, out = merged.pop("seed"), merged.pop("out")
    return ExperimentConfig(experiment=experiment, seed=seed, out=out, params=merged)


# Summary formatting

def fmt(value):
    if value is None:
        return "absent"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (tuple, list)):
        return ",".join(fmt(v) if not isinstance(v, str) else v for v in value)
    return str(value)


class Summary:
    def __init__(self):
        self.items = []
        self.checks = []

    def add(self, key, value):
        self.items.append((key, fmt(value)))

    def check(self, name, ok):
        self.checks.append((name, bool(ok)))

    @property
    def ok(self):
        return all(ok for _, ok in self.checks)

    def lines(self):
        out = [f"{k}={v}" for k, v in self.items]
        out += [f"check.{name}={'pass' if ok else 'fail'}" for name, ok in self.checks]
        out.append(f"status={'pass' if self.ok else 'fail'}")
        return out

    def write(self, path):
        path.write_text("\n".join(self.lines()) + "\n")


def _write_trace(trace, path):
    with open(path, "w", newline="") as fh:
        trace.write_csv(fh)


def _header(summary, cfg):
    summary.add("experiment", cfg.experiment)
    summary.add("seed", cfg.seed)
    for key in sorted(cfg.params):
        summary.add(key, cfg.params[key])


# Experiments

def _run_phase(cfg, out, s):
    p = cfg.params
    sw = sweeps.phase_sweep(cfg.seed, betas=p["beta"], eta=p["eta"], d=p["d"], n=p["n"],
                            T=p["T"], zeta=p["zeta"])
    s.add("w0_par", float(sw.w0 @ sw.inst.w_star))
    s.add("w0_norm", float(np.linalg.norm(sw.w0)))
    for r in sw.runs:
        _write_trace(r.trace, out / f"phase_beta={sweeps.file_label(r.label)}.csv")
        k = f"run[{r.label}]"
        s.add(f"{k}.diverged", r.diverged)
        s.add(f"{k}.switch_t", r.trace.meta.get("switch_t"))
        s.add(f"{k}.T_zeta", r.stages.T_zeta)
        s.add(f"{k}.theory_T_zeta", r.stages.theory_T_zeta)
        s.add(f"{k}.c_n_hat", r.c_n_hat)
        s.add(f"{k}.c_m_hat", r.stages.c_m_hat)
        for name in ("T0", "Tb", "Ta"):
            s.add(f"{k}.{name}", getattr(r.stages, name))
        for name in ("T0", "Tb", "Ta"):
            s.add(f"{k}.{name}_cn0", getattr(r.stages_cn0, name))
        s.add(f"{k}.nu_hat", r.rate.nu if r.rate else None)
        s.add(f"{k}.nu_flagged", r.rate.flagged if r.rate else None)
        s.add(f"{k}.sign_persistent", r.sign_persistent)
    const = sweeps.constant_entries(sw.runs)
    s.check("no_divergence", not any(r.diverged for r in sw.runs))
    if len(const) > 1:
        s.check("T_zeta_decreasing_in_beta", sw.ordered)
    s.check("sign_persistent", all(r.sign_persistent for r in sw.runs))
    s.check("par_nondecreasing", all(r.par_nondecreasing for r in const))
    s.check("perp_eventually_decreasing", all(r.perp_eventually_decreasing for r in const))


def _run_cubic(cfg, out, s):
    p = cfg.params
    sw = sweeps.cubic_sweep(cfg.seed, betas=p["beta"], eta=p["eta"], T=p["T"], delta=p["delta"],
                            d=p["d"], rho=p["rho"], norm_wstar=p["norm_wstar"], normA=p["normA"],
                            gamma=p["gamma"], gap=p["gap"], r=p["r"], perturb=p["perturb_b"])
    inst = sw.inst
    cert = check_optimality(inst, inst.w_star)
    s.add("gamma", inst.gamma)
    s.add("b1", inst.b1)
    s.add("f_star", inst.f_star)
    s.add("optimality_residual", cert.gradient_residual)
    for r in sw.runs:
        _write_trace(r.trace, out / f"cubic_beta={sweeps.file_label(r.label)}.csv")
        k = f"run[{r.label}]"
        rep = r.delta_report
        s.add(f"{k}.diverged", r.diverged)
        s.add(f"{k}.T_delta", rep.T_delta_measured)
        s.add(f"{k}.T_delta_bound", rep.T_delta_bound)
        s.add(f"{k}.preconditions_met", rep.preconditions_met)
        s.add(f"{k}.nu_hat", r.rate.nu if r.rate else None)
        s.add(f"{k}.nu_flagged", r.rate.flagged if r.rate else None)
        s.add(f"{k}.norm_nondecreasing", r.norm_nondecreasing)
    const = sweeps.constant_entries(sw.runs)
    s.check("no_divergence", not any(r.diverged for r in sw.runs))
    s.check("optimality_certificate", cert.ok and cert.unique)
    s.check("T_delta_bound", sw.bounds_ok)
    if len(const) > 1:
        s.check("T_delta_nonincreasing_in_beta", sw.entry_ordered)
        fits = [r for r in const if r.rate is not None and not r.rate.flagged]
        if len(fits) > 1:
            s.check("rate_improves_with_beta", fits[-1].rate.nu > fits[0].rate.nu)
    s.check("norm_nondecreasing", all(r.norm_nondecreasing for r in const if r.config.beta <= 0.5))


def _run_saddle(cfg, out, s):
    p = cfg.params
    sw = sweeps.saddle_sweep(cfg.seed, betas=p["beta"], eta=p["eta"], n=p["n"], T=p["T"],
                             drop=p["drop"])
    s.add("x_bar", tuple(float(v) for v in sw.inst.x_bar))
    first_step = True
    for r in sw.runs:
        _write_trace(r.trace, out / f"saddle_beta={sweeps.file_label(r.label)}.csv")
        k = f"run[{r.label}]"
        s.add(f"{k}.diverged", r.diverged)
        s.add(f"{k}.escape_t", r.escape_t)
        s.add(f"{k}.escape_sign_persistent", r.sign_persistent)
        if len(r.trace) > 1:
            w1 = np.array([r.trace.rows[1]["w1"], r.trace.rows[1]["w2"]])
            first_step &= bool(np.array_equal(w1, -r.config.eta * sw.inst.x_bar))
    s.check("no_divergence", not any(r.diverged for r in sw.runs))
    s.check("first_step", first_step)
    s.check("escape_sign_persistent", all(r.sign_persistent for r in sw.runs))
    if len(sweeps.constant_entries(sw.runs)) > 1:
        s.check("escape_decreasing_in_beta", sw.ordered)


def _run_eig(cfg, out, s):
    p = cfg.params
    sw = sweeps.eig_sweep(cfg.seed, etas=p["eta"], betas=p["beta"], d=p["d"], tol=p["tol"],
                          T=p["T"])
    for r in sw.runs:
        _write_trace(r.trace, out / f"eig_eta={r.eta:g}_beta={sweeps.file_label(r.label)}.csv")
        s.add(f"run[eta={r.eta:g},beta={r.label}].iterations", r.iterations)
        s.add(f"run[eta={r.eta:g},beta={r.label}].rescales", r.trace.meta["rescales"])
    ratios = sw.ratios()
    for eta, ratio in zip(sorted(sw.etas, reverse=True), ratios):
        s.add(f"ratio[eta={eta:g}]", ratio)
    multi_beta = len(sweeps.constant_entries([r for r in sw.runs if r.eta == sw.etas[0]])) > 1
    for eta in sw.etas:
        s.check(f"reached_tol.{eta:g}", None not in sw.iterations(eta))
        if multi_beta:
            s.check(f"iterations_decreasing_in_beta.{eta:g}", sw.ordered_at(eta))
    if multi_beta and len(sw.etas) > 1:
        s.check("ratio_shrinks_with_eta", sw.ratio_shrinks)


def _run_lemmas(cfg, out, s):
    p = cfg.params
    root = Rng(cfg.seed).spawn("lemmas")
    for mode in dynamics.MODES:
        res = dynamics.sweep(mode, root.spawn(mode), trials=p["trials"], max_T=p["max_T"])
        s.add(f"{mode}.trials", res.trials)
        s.add(f"{mode}.violations", res.violations)
        s.add(f"{mode}.worst_excess", res.worst_excess)
        s.check(f"{mode}_no_violations", res.ok)


def _run_gradcheck(cfg, out, s):
    p = cfg.params
    for problem in p["problem"]:
        rep = gradcheck.grad_check(problem, seed=cfg.seed, count=p["count"], h=p["h"])
        s.add(f"{problem}.max_rel_error", rep.max_rel_error)
        s.add(f"{problem}.informational", rep.informational)
        s.check(f"{problem}_gradient", rep.passed(p["tol"]))


RUNNERS = {
    "phase": _run_phase, "cubic": _run_cubic, "saddle": _run_saddle,
    "eig": _run_eig, "lemmas": _run_lemmas, "gradcheck": _run_gradcheck,
}


def run_experiment(cfg):
    """Run `cfg`, write its outputs and return the :class:`Summary`."""
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    summary = Summary()
    _header(summary, cfg)
    RUNNERS[cfg.experiment](cfg, out, summary)
    summary.write(out / f"{cfg.experiment}_summary.txt")
    return summary


def make_parser():
    parser = argparse.ArgumentParser(
        prog="heavyball",
        description="Heavy Ball momentum experiments on phase retrieval, the cubic "
                    "subproblem, a saddle and top-eigenvector computation.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--seed", help="master seed (default 0)")
        p.add_argument("--out", help=f"output directory (default ${ENV_OUT} or ./{DEFAULT_OUT})")
        p.add_argument("--config", help="file of key=value lines")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key; repeatable")
        if name not in ("lemmas", "gradcheck"):
            p.add_argument("--beta", help="comma list of betas; '1->0.9' is the switch schedule")
            p.add_argument("--T", help="iteration cap")
            eta_help = "comma list of step sizes" if name == "eig" else "step size"
            p.add_argument("--eta", help=eta_help)
        if name == "phase":
            p.add_argument("--zeta", help="benign-region radius")
        if name == "cubic":
            p.add_argument("--delta", help="entry margin for T_delta")
            p.add_argument("--perturb-b", action="store_true",
                           help="nudge b by a small Gaussian vector")
    return parser


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {}
    for item in args.set:
        if "=" not in item:
            parser.error(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    for key in ("seed", "out", "beta", "T", "eta", "zeta", "delta"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "perturb_b", False):
        overrides["perturb_b"] = "true"
    try:
        cfg = build_config(args.experiment, overrides, args.config)
    except (ConfigError, OSError) as exc:
        parser.error(str(exc))
    try:
        summary = run_experiment(cfg)
    except ValueError as exc:
        parser.error(str(exc))
    for line in summary.lines():
        if line.startswith(("check.", "status=")):
            print(line)
    return 0 if summary.ok else 1


if __name__ == "__main__":
    sys.exit(main())
