"""Command-line experiment runner.

Subcommands::

    sdlab run EXPERIMENT      thm1 | valiron | thm4 | thm2 | thm3 | maximal | lognorm | verify-all
    sdlab construct WHAT      thm1 | thm4 | thm2 | window  (writes sample CSV/JSON)
    sdlab trace KIND          thm1 | valiron | thm4 | thm2 | thm3  (trace only)
    sdlab verify CHECK...     selected entries of the verifier battery
    sdlab norm                PW1 norms of windows or of a perturbation spec
    sdlab verify-all          the whole battery

Configuration files are flat ``key = value`` text, one key per line, ``#``
starts a comment.  Keys are the long flag names without dashes (``indices``,
``grid-step``, ...); a flag on the command line overrides the file.

Exit status: 0 when every enabled check holds, 1 when a check fails, 2 on
configuration or construction errors.  Once the configuration has been
parsed a ``manifest.json`` is written to the output directory on every path.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import mpmath as mp
import numpy as np

from . import __version__, battery, oracle
from .analysis import (
    GRID_STEP,
    Check,
    TraceConfig,
    divergence_trace,
    log_normalized_sup,
    oscillation_trace,
    pw1_norm,
    verify_maximal_domination,
    verify_thm1_lower_bound,
    verify_thm4_decomposition,
)
from .errors import SDLError
from .signals import (
    DEFAULT_CAP,
    SampleSequence,
    ScheduleConfig,
    compute_envelope,
    fmt,
    thm1_adversary,
    thm2_adversary,
    thm4_adversary,
    trapezoid_samples,
)

EXPERIMENTS = ("thm1", "valiron", "thm4", "thm2", "thm3", "maximal", "lognorm", "verify-all")
TRACE_KIND = {
    "thm1": "shannon_thm1",
    "valiron": "valiron",
    "thm4": "thm4",
    "thm2": "sinetype_thm2",
    "thm3": "sinecrossing_thm3",
}
CONSTRUCTS = ("thm1", "thm4", "thm2", "window")

# key -> (parser, default); every key is also a long flag
SCHEMA = {
    "out": (str, "sdlab-out"),
    "grid-step": (float, GRID_STEP),
    "oversample": (int, 32),
    "indices": ("ints", None),
    "weights": ("floats", None),
    "levels": (int, None),
    "perturbation": (str, "default"),
    "precision": (str, "double"),
    "ladder": ("ints", None),
    "t0": (float, 0.3),
    "cap": (int, DEFAULT_CAP),
    "only": (str, None),
}


class ConfigError(SDLError):
    """Unparseable or inconsistent configuration."""


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _coerce(key: str, raw):
    kind, _ = SCHEMA[key]
    if not isinstance(raw, str):
        return raw
    if kind == "ints":
        return _ints(raw)
    if kind == "floats":
        return _floats(raw)
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def read_config_file(path: str | Path) -> dict:
    """Parse a flat ``key = value`` file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("_", "-")
        if key not in SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


@dataclass
class ExperimentConfig:
    """Fully resolved settings for one invocation."""

    command: str
    target: str
    out: str = "sdlab-out"
    grid_step: float = GRID_STEP
    oversample: int = 32
    indices: tuple[int, ...] | None = None
    weights: tuple[float, ...] | None = None
    levels: int | None = None
    perturbation: str = "default"
    precision: str = "double"
    ladder: tuple[int, ...] | None = None
    t0: float = 0.3
    cap: int = DEFAULT_CAP
    only: str | None = None
    checks: tuple[str, ...] = ()
    fault: str | None = None

    def __post_init__(self):
        for name in ("grid_step", "oversample", "cap", "t0"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name.replace('_', '-')} must be positive, got {v}")
        if self.levels is not None and self.levels < 1:
            raise ConfigError(f"levels must be positive, got {self.levels}")
        for name in ("indices", "ladder"):
            v = getattr(self, name)
            if v is not None and (not v or min(v) < 1):
                raise ConfigError(f"{name} must be a nonempty list of positive integers")
        if self.weights is not None and (not self.weights or min(self.weights) <= 0):
            raise ConfigError("weights must be a nonempty list of positive numbers")
        if self.precision not in ("double", "oracle"):
            raise ConfigError(f"precision must be double or oracle, got {self.precision!r}")
        if float(self.t0) == round(self.t0):
            raise ConfigError(f"t0 must not be an integer, got {self.t0}")
        parse_perturbation(self.perturbation)

    def echo(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}


# ---------------------------------------------------------------- perturbations


def parse_perturbation(spec: str) -> SampleSequence | None:
    """``default`` -> None; ``zero``; ``trapezoid:N:scale``; ``delta:k:value``; ``file:PATH``."""
    head, _, rest = spec.partition(":")
    try:
        if head == "default":
            return None
        if head == "zero":
            return SampleSequence.zeros()
        if head == "trapezoid":
            n, scale = rest.split(":")
            return trapezoid_samples(int(n)).scaled(float(scale))
        if head == "delta":
            k, value = rest.split(":")
            return SampleSequence.delta(int(k), float(value))
        if head == "file":
            text = Path(rest).read_text(encoding="utf-8")
            return SampleSequence.from_json(text) if rest.endswith(".json") else SampleSequence.from_csv(text)
    except (ValueError, OSError) as e:
        raise ConfigError(f"bad perturbation {spec!r}: {e}") from None
    raise ConfigError(f"unknown perturbation {spec!r}; use zero, default, trapezoid:N:scale, delta:k:value or file:PATH")


# ---------------------------------------------------------------- schedules


def schedule_from(cfg: ExperimentConfig, default=(4, 16, 64, 256)) -> ScheduleConfig:
    """Indices (or ``4**l`` for ``levels``) with given weights or ``1/l**2``."""
    idx = cfg.indices
    if idx is None:
        idx = tuple(4**l for l in range(1, cfg.levels + 1)) if cfg.levels else default
    if cfg.levels is not None and cfg.levels != len(idx):
        raise ConfigError(f"levels={cfg.levels} but {len(idx)} indices given")
    weights = cfg.weights or tuple(1.0 / l**2 for l in range(1, len(idx) + 1))
    return ScheduleConfig(idx, weights, cfg.cap)


def trace_config(cfg: ExperimentConfig) -> TraceConfig:
    tc = TraceConfig(step=cfg.grid_step, t0=cfg.t0, cap=cfg.cap, ladder=cfg.ladder,
                     perturbation=parse_perturbation(cfg.perturbation))
    exp = cfg.target
    if exp in ("thm1", "valiron"):
        tc.schedule = schedule_from(cfg)
    elif exp == "thm4":
        if cfg.indices is not None:
            tc.base_subseq = cfg.indices
        tc.r_max = cfg.levels or (len(cfg.weights) if cfg.weights else len(tc.base_subseq))
        tc.block_weights = cfg.weights if cfg.weights else None
        if tc.block_weights is None and cfg.indices is None:
            tc.block_weights = (1.0, 0.25)
    elif exp == "thm2":
        if cfg.levels:
            tc.k_max = cfg.levels
        if cfg.indices:
            tc.sine_ladder = cfg.indices
    elif exp == "thm3":
        if cfg.indices:
            tc.thm3_schedule = schedule_from(cfg, cfg.indices)
    return tc


# ---------------------------------------------------------------- experiments


@dataclass
class Result:
    checks: list[Check] = field(default_factory=list)
    files: dict[str, str] = field(default_factory=dict)
    info: dict = field(default_factory=dict)


def _oracle_probe_check(name: str, rows, exact) -> Check:
    worst = max(abs(r.certified_lower - float(abs(exact(r.N)))) for r in rows)
    return Check(name, worst, 1e-8, worst <= 1e-8, 1e-8, "double probe vs 50-digit oracle")


def _trace_files(trace) -> dict[str, str]:
    stem = "trace_" + trace.kind
    return {stem + ".csv": trace.to_csv(), stem + ".json": trace.to_json() + "\n"}


def run_trace_experiment(cfg: ExperimentConfig, with_checks: bool = True) -> Result:
    exp = cfg.target
    tc = trace_config(cfg)
    kind = TRACE_KIND[exp]
    res = Result()
    if exp in ("thm2", "thm3"):
        rep = oscillation_trace(kind, tc)
        trace = rep.trace
        res.info["levels"] = [[N, c] for N, c in rep.levels]
        if with_checks:
            res.checks.extend(rep.checks)
    else:
        trace = divergence_trace(kind, tc)
    res.files.update(_trace_files(trace))
    res.checks.append(Check(f"{kind}:trace_consistent", 0.0, 0.0, trace.consistent()))
    if not with_checks:
        return res

    if exp == "thm1":
        g, f1 = thm1_adversary(tc.schedule)
        for r in trace.rows:
            if r.N <= tc.schedule.indices[-1]:
                res.checks.append(verify_thm1_lower_bound(g, tc.schedule, r.N, 1e-9).check(r.N, 1e-9))
        if cfg.precision == "oracle":
            res.checks.append(_oracle_probe_check(
                "thm1_probe_oracle", trace.rows, lambda N: oracle.half_integer_closed_form(g, N)))
    elif exp == "valiron":
        f1 = thm1_adversary(tc.schedule).f1
        if cfg.precision == "oracle":
            def exact(N):
                with mp.workdps(oracle.DPS):
                    t = N + 0.5
                    f_t0 = oracle.reconstruct(f1, tc.t0)
                    return oracle.reconstruct(f1, t) - oracle.valiron_partial(f1, f_t0, tc.t0, N, t)
            res.checks.append(_oracle_probe_check("valiron_probe_oracle", trace.rows, exact))
    elif exp == "thm4":
        adv = thm4_adversary(tc.base_subseq, tc.r_max, tc.block_weights, cap=tc.cap)
        res.info["chosen"] = list(adv.chosen)
        for m in range(1, len(adv.parts) + 1):
            res.checks.extend(verify_thm4_decomposition(adv, m).checks)
        if cfg.precision == "oracle":
            res.checks.append(_oracle_probe_check(
                "thm4_probe_oracle", trace.rows,
                lambda N: oracle.shannon_partial(adv.f1, N, N + 0.5, lo=0)))
    return res


def run_maximal(cfg: ExperimentConfig) -> Result:
    subseq = cfg.indices or (2, 4, 8)
    pert = parse_perturbation(cfg.perturbation)
    if pert is None:
        pert = SampleSequence(0, max(subseq), np.random.default_rng(battery.SEED).standard_normal(max(subseq) + 1))
    c = verify_maximal_domination(pert, subseq, step=cfg.grid_step)
    return Result([c])


def run_lognorm(cfg: ExperimentConfig) -> Result:
    f1 = thm1_adversary(schedule_from(cfg)).f1
    ladder = cfg.ladder or (4, 8, 16, 32, 64, 128, 256)
    rows = log_normalized_sup(f1, ladder, cfg.grid_step)
    csv_text = "N,sup_over_log_N\n" + "".join(f"{N},{fmt(v)}\n" for N, v in rows)
    return Result(files={"lognorm.csv": csv_text})


def run_battery(cfg: ExperimentConfig, names=None) -> Result:
    if cfg.only is not None:
        names = [n.strip() for n in cfg.only.split(",") if n.strip()]
        if not names:
            raise ConfigError("empty battery selection")
    try:
        out = battery.run_battery(names, fault=cfg.fault)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    report = {"checks": [c.to_dict() for c in out.checks], "observations": out.observations}
    files = dict(out.files)
    files["report.json"] = json.dumps(report, indent=2, sort_keys=True) + "\n"
    return Result(out.checks, files, {"observations": out.observations})


def run_construct(cfg: ExperimentConfig) -> Result:
    what = cfg.target
    res = Result()

    def emit(name: str, s: SampleSequence):
        res.files[name + ".csv"] = s.to_csv()
        res.files[name + ".json"] = s.to_json() + "\n"

    if what == "thm1":
        g, f1 = thm1_adversary(schedule_from(cfg))
        emit("thm1_g", g)
        emit("thm1_f1", f1)
    elif what == "thm4":
        tc = trace_config(ExperimentConfig(**{**asdict(cfg), "target": "thm4"}))
        adv = thm4_adversary(tc.base_subseq, tc.r_max, tc.block_weights, cap=tc.cap)
        emit("thm4_f1", adv.f1)
        res.info.update(chosen=list(adv.chosen), block_n1=list(adv.block_n1),
                        middle_bounds=list(adv.middle_bounds))
    elif what == "thm2":
        pert = parse_perturbation(cfg.perturbation)
        if pert is None:
            pert = trapezoid_samples(2).scaled(0.1)
        adv = thm2_adversary(compute_envelope(pert), cfg.levels or 3, cfg.cap)
        emit("thm2_g1", adv.g1)
        emit("thm2_f1", adv.f1)
        res.info.update(schedule=list(adv.schedule), complete=adv.complete, violation=adv.violation)
    elif what == "window":
        for n in cfg.indices or (1,):
            emit(f"window_{n}", trapezoid_samples(n))
    return res


def run_norm(cfg: ExperimentConfig) -> Result:
    res = Result()
    lines = ["signal,value,error\n"]
    if cfg.perturbation != "default":
        s = parse_perturbation(cfg.perturbation)
        v = pw1_norm(s, cfg.oversample)
        lines.append(f"{cfg.perturbation},{fmt(v.value)},{fmt(v.error)}\n")
    else:
        for n in cfg.indices or tuple(range(1, 65)):
            v = pw1_norm(trapezoid_samples(n), cfg.oversample)
            lines.append(f"window_{n},{fmt(v.value)},{fmt(v.error)}\n")
            res.checks.append(Check(f"window_norm_below_3[N={n}]", v.value, 3.0, v.value < 3.0))
    res.files["norms.csv"] = "".join(lines)
    return res


def execute(cfg: ExperimentConfig) -> Result:
    if cfg.command == "construct":
        return run_construct(cfg)
    if cfg.command == "norm":
        return run_norm(cfg)
    if cfg.command == "trace":
        return run_trace_experiment(cfg, with_checks=False)
    if cfg.command == "verify":
        return run_battery(cfg, cfg.checks)
    if cfg.command == "verify-all" or cfg.target == "verify-all":
        return run_battery(cfg)
    if cfg.target == "maximal":
        return run_maximal(cfg)
    if cfg.target == "lognorm":
        return run_lognorm(cfg)
    return run_trace_experiment(cfg)


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value file; flags override it")
    common.add_argument("--out", metavar="DIR", help="output directory (default sdlab-out)")
    common.add_argument("--grid-step", type=float, metavar="F")
    common.add_argument("--oversample", type=int, metavar="K")
    common.add_argument("--indices", metavar="LIST", help="comma-separated schedule indices")
    common.add_argument("--weights", metavar="LIST", help="comma-separated level weights")
    common.add_argument("--levels", type=int, metavar="N")
    common.add_argument("--perturbation", metavar="SPEC",
                        help="zero | default | trapezoid:N:scale | delta:k:value | file:PATH")
    common.add_argument("--precision", choices=("double", "oracle"))
    common.add_argument("--ladder", metavar="LIST", help="comma-separated N values to trace")
    common.add_argument("--t0", type=float, help="Valiron anchor point")
    common.add_argument("--cap", type=int, help="coefficient cap for schedules")
    common.add_argument("--inject-fault", dest="fault", choices=battery.FAULTS, help=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="sdlab", description="Sampling-series divergence experiments.")
    p.add_argument("--version", action="version", version=f"sdlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run one experiment with its verifiers")
    r.add_argument("target", choices=EXPERIMENTS, metavar="EXPERIMENT")
    r.add_argument("--only", metavar="LIST", help="battery entries for verify-all")
    c = sub.add_parser("construct", parents=[common], help="write adversary samples")
    c.add_argument("target", choices=CONSTRUCTS)
    t = sub.add_parser("trace", parents=[common], help="write a divergence trace")
    t.add_argument("target", choices=tuple(TRACE_KIND))
    v = sub.add_parser("verify", parents=[common], help="run selected battery entries")
    v.add_argument("checks", nargs="+", choices=tuple(battery.BATTERY), metavar="CHECK")
    sub.add_parser("norm", parents=[common], help="PW1 norms of windows or a perturbation")
    a = sub.add_parser("verify-all", parents=[common], help="run the full battery")
    a.add_argument("--only", metavar="LIST", help="comma-separated battery entries")
    return p


def resolve(args: argparse.Namespace) -> ExperimentConfig:
    values = read_config_file(args.config) if args.config else {}
    for key in SCHEMA:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            values[key] = _coerce(key, flag)
    kwargs = {k.replace("-", "_"): v for k, v in values.items()}
    target = getattr(args, "target", args.command)
    return ExperimentConfig(args.command, target, checks=tuple(getattr(args, "checks", ()) or ()),
                            fault=args.fault, **kwargs)


def write_outputs(out_dir: Path, files: dict[str, str]) -> list[str]:
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(files.items()):
        with open(out_dir / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return sorted(files)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
    except SDLError as e:
        print(f"sdlab: config error: {e}", file=sys.stderr)
        return 2

    out_dir = Path(cfg.out)
    start = time.perf_counter()
    manifest = {"version": __version__, "config": cfg.echo()}
    status, error, res = 0, None, Result()
    try:
        res = execute(cfg)
        failed = [c.name for c in res.checks if not c.holds]
        if failed:
            status = 1
            print("sdlab: failed checks: " + ", ".join(failed), file=sys.stderr)
    except SDLError as e:
        status, error = 2, str(e)
        print(f"sdlab: error: {e}", file=sys.stderr)

    manifest.update(
        status=status,
        error=error,
        wall_time_s=time.perf_counter() - start,
        verdicts=[c.to_dict() for c in res.checks],
        info=res.info,
    )
    try:
        manifest["files"] = write_outputs(out_dir, res.files)
        write_outputs(out_dir, {"manifest.json": json.dumps(manifest, indent=2, default=float) + "\n"})
    except OSError as e:
        print(f"sdlab: cannot write to {out_dir}: {e.strerror}", file=sys.stderr)
        return 2
    n_ok = sum(c.holds for c in res.checks)
    print(f"{cfg.command} {cfg.target}: {n_ok}/{len(res.checks)} checks hold -> {out_dir}")
    return status


if __name__ == "__main__":
    sys.exit(main())
