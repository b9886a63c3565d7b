"""Command-line front end.

Every command prints a result envelope (config echo, payload, warnings,
version) as JSON with sorted keys or as CSV.  The same flags and seed always
produce the same bytes, whatever ``--threads`` or ``WEYLLAB_THREADS`` say.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass, field

from . import __version__, acceptance, cocycle, diophantine, perturbation, weyl
from ._parallel import THREADS_ENV, default_threads
from .torus import Frequency

COMMANDS = ("alpha", "pn", "lyapunov", "weyl-moments", "goodset", "cjvh", "fjk",
            "curlicue", "amo", "verify")

COMMAND_HELP = {
    "alpha": "perturbative coefficient alpha_{2k}(n) of the skew-shift cocycle",
    "pn": "torus average of Tr[M_n^T M_n] on an exact quadrature grid",
    "lyapunov": "finite-n Lyapunov exponent by Monte Carlo over the torus",
    "weyl-moments": "moments of quadratic Weyl sums (second, first, parity, pz)",
    "goodset": "measure of frequencies whose Weyl-sum energy exceeds a threshold",
    "cjvh": "estimate of the first-moment constant at several lengths",
    "fjk": "even-numerator approximations and the subsequence lower bound",
    "curlicue": "partial sums of the Weyl sum as a polyline",
    "amo": "almost-Mathieu alpha~_{2k}(n) with the alpha_2 closed form",
    "verify": "run the acceptance criteria",
}

# flags that steer execution only and are kept out of the echoed config
_EXECUTION = {"command", "threads", "output", "timing"}


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    omega: str | None = None
    n: int | None = None
    lam: float | None = None
    E: float | None = None
    k: int | None = None
    samples: int | None = None
    seed: int | None = None
    nx: int | None = None
    ny: int | None = None
    C: float | None = None
    q_max: int | None = None
    threshold: float | None = None
    m: str | None = None
    cmd: str | None = None
    potential: str | None = None
    method: str | None = None
    eps: float | None = None
    output: str | None = None
    format: str = "json"
    threads: int | None = None
    timing: bool = False

    def echo(self):
        out = {"command": self.command}
        for key, val in vars(self).items():
            if key not in _EXECUTION and val is not None and key != "format":
                out["lambda" if key == "lam" else key] = val
        return out


@dataclass
class ResultEnvelope:
    config: dict
    result: dict
    warnings: list = field(default_factory=list)
    version: str = __version__
    wall_time: float | None = None
    ok: bool = True
    csv_rows: list | None = None

    def to_dict(self):
        out = {"config": self.config, "result": self.result, "warnings": self.warnings,
               "version": self.version}
        if self.wall_time is not None:
            out["wall_time"] = self.wall_time
        return out


def _omega(cfg, default=None):
    text = cfg.omega if cfg.omega is not None else default
    if text is None:
        raise UsageError("--omega is required")
    try:
        return Frequency.parse(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"malformed omega {text!r}: {exc}") from None


def _need(cfg, name, default=None, low=None):
    val = getattr(cfg, name)
    if val is None:
        if default is None:
            raise UsageError(f"--{name.replace('_', '-')} is required")
        val = default
    if low is not None and val < low:
        raise UsageError(f"--{name.replace('_', '-')} must be >= {low}")
    return val


def _m_list(cfg, default):
    text = cfg.m if cfg.m is not None else default
    try:
        ms = [int(s) for s in str(text).split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"malformed --m list {text!r}") from None
    if not ms or min(ms) < 1:
        raise UsageError("--m entries must be >= 1")
    return ms


def _grid(cfg, n):
    dx, dy = cocycle.default_grid(n)
    return (cfg.nx or dx, cfg.ny or dy)


def cmd_alpha(cfg):
    n = _need(cfg, "n", low=1)
    k = _need(cfg, "k", low=0)
    w = _omega(cfg)
    method = cfg.method or "bruteforce"
    if k > n:
        raise UsageError(f"--k must be <= n = {n}")
    if method == "bruteforce":
        val = perturbation.alpha_bruteforce(n, k, w)
    elif method == "oracle":
        val = perturbation.poly_oracle(n, w, (cfg.nx, cfg.ny) if cfg.nx and cfg.ny else None).coeffs[k]
    elif method == "closed":
        if k == 1:
            val = perturbation.alpha2_closed(n)
        elif k == 2:
            val = perturbation.alpha4_closed(n, w)
        else:
            raise UsageError("closed forms exist for k = 1, 2 only")
    else:
        raise UsageError(f"unknown --method {method!r}")
    return {f"alpha{2 * k}": val}


def cmd_pn(cfg):
    n = _need(cfg, "n", low=1)
    lam = _need(cfg, "lam", 0.0)
    w = _omega(cfg)
    val = cocycle.p_n_grid(n, lam, w, _grid(cfg, n), _need(cfg, "E", 0.0))
    out = {"P": val}
    if val > 0:
        out["jensen_rate"] = math.log(val) / n
    return out


def cmd_lyapunov(cfg):
    est = cocycle.lyapunov_mc(_need(cfg, "lam"), _need(cfg, "E", 0.0), _omega(cfg),
                              _need(cfg, "n", low=1), _need(cfg, "samples", low=1),
                              _need(cfg, "seed", 0), cfg.potential or "skew", cfg.threads)
    return {"value": est.value, "stderr": est.stderr, "samples": est.samples, "n": est.n,
            "seed": est.seed, "log_lambda": math.log(cfg.lam) if cfg.lam > 0 else None}


def cmd_weyl_moments(cfg):
    which = cfg.cmd or "second"
    if which == "second":
        n = _need(cfg, "n", low=2)
        return {"value": weyl.second_moment_check(n), "exact": n * (n - 1) / 2}
    if which == "first":
        reps = weyl.first_moment_curve(_m_list(cfg, "1000"), _need(cfg, "samples", low=2),
                                       _need(cfg, "seed", 0), cfg.method or "W", cfg.threads)
        return {"estimates": [{"m": r.n, "estimate": r.estimate, "stderr": r.stderr} for r in reps]}
    if which == "parity":
        return {"difference": weyl.parity_identity_check(_need(cfg, "n", low=1), _omega(cfg))}
    if which == "pz":
        lhs, rhs = weyl.paley_zygmund_check(_need(cfg, "n", low=2), _need(cfg, "samples", low=2),
                                            _need(cfg, "seed", 0), 0.5, cfg.threads)
        return {"probability": lhs, "paley_zygmund_bound": rhs, "theta": 0.5}
    raise UsageError(f"unknown --cmd {which!r} (second, first, parity, pz)")


def _default_threshold(cfg):
    est = weyl.cjvh_estimate([2000, 8000, 32000], _need(cfg, "samples", 2000),
                             _need(cfg, "seed", 0), cfg.threads)
    return est.c1 ** 2 / 16.0


def cmd_goodset(cfg):
    n = _need(cfg, "n", low=2)
    thr = cfg.threshold if cfg.threshold is not None else _default_threshold(cfg)
    if cfg.omega is not None:
        w = _omega(cfg)
        if w.is_rational:
            raise UsageError("good sets ignore the null set of rational frequencies; pass a decimal or named omega")
        energy = weyl.z_n(w, n) ** 2 / n ** 2
        return {"energy": energy, "threshold": thr, "member": energy > thr}
    rep = weyl.good_set_measure(n, thr, _need(cfg, "samples", low=1), _need(cfg, "seed", 0), cfg.threads)
    return {"measure": rep.estimate, "stderr": rep.stderr, "threshold": thr}


def cmd_cjvh(cfg):
    est = weyl.cjvh_estimate(_m_list(cfg, "2000,8000,32000"), _need(cfg, "samples", low=2),
                             _need(cfg, "seed", 0), cfg.threads)
    return {"c_jvh": est.c_jvh, "stderr": est.stderr, "c1": est.c1, "c0": est.c0,
            "delta": est.delta, "threshold": est.c1 ** 2 / 16.0,
            "estimates": [{"m": r.n, "estimate": r.estimate, "stderr": r.stderr} for r in est.reports]}


def cmd_fjk(cfg):
    w = _omega(cfg)
    C = _need(cfg, "C", 64.0)
    q_max = _need(cfg, "q_max", 1000, low=2)
    if C < 16:
        raise UsageError("--C must be >= 16")
    report = diophantine.subsequence_bound_check(w, C, q_max)
    rows = []
    for e in report.entries:
        ctx = diophantine.fjk_context(w, (e.p, e.q))
        s = abs(weyl.weyl_prefix(e.N, w).at(e.N))
        t = diophantine.fjk_main_term_magnitude(e.N, ctx, _need(cfg, "eps", 0.25))
        rows.append(dict(e.to_dict(), p=e.p, xi=ctx.xi, abs_S_N=s, abs_T_N=t))
    return {"entries": rows}


def cmd_curlicue(cfg):
    path = weyl.curlicue_path(_need(cfg, "n", low=1), _omega(cfg))
    return {"t": path.t.tolist(), "re": path.positions.real.tolist(), "im": path.positions.imag.tolist()}


def cmd_amo(cfg):
    n = _need(cfg, "n", low=1)
    k = _need(cfg, "k", 1, low=0)
    w = _omega(cfg)
    if k > n:
        raise UsageError(f"--k must be <= n = {n}")
    if cfg.method not in (None, "bruteforce"):
        raise UsageError("amo only supports --method bruteforce (the closed form is reported alongside)")
    out = {f"alpha{2 * k}": perturbation.amo_alpha_bruteforce(n, k, w)}
    if k == 1 and w.value != 0.5:
        out["closed"] = perturbation.amo_alpha2_closed(n, w)
        out["bound"] = 2.0 / math.cos(math.pi * w.value) ** 2
    return out


def cmd_verify(cfg):
    results = acceptance.run_all()
    for r in results:
        print(acceptance.format_line(r), file=sys.stderr)
    rows = []
    for r in results:
        row = r.to_dict()
        if not cfg.timing:  # keep the payload reproducible byte for byte
            del row["seconds"]
            row["measured"] = {k: v for k, v in row["measured"].items() if k != "runtime_s"}
        rows.append(row)
    return {"criteria": rows, "passed": all(r.passed for r in results)}


HANDLERS = {
    "alpha": cmd_alpha, "pn": cmd_pn, "lyapunov": cmd_lyapunov, "weyl-moments": cmd_weyl_moments,
    "goodset": cmd_goodset, "cjvh": cmd_cjvh, "fjk": cmd_fjk, "curlicue": cmd_curlicue,
    "amo": cmd_amo, "verify": cmd_verify,
}


def run(cfg: RunConfig) -> ResultEnvelope:
    if cfg.command not in HANDLERS:
        raise UsageError(f"unknown command {cfg.command!r}")
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            payload = HANDLERS[cfg.command](cfg)
        except (perturbation.InvalidOrderError, perturbation.SingularFrequencyError,
                diophantine.ExactRationalError, diophantine.HypothesisRangeError) as exc:
            raise UsageError(str(exc)) from None
    env = ResultEnvelope(cfg.echo(), payload, [str(w.message) for w in caught])
    if cfg.timing:
        env.wall_time = time.perf_counter() - t0
    if cfg.command == "verify":
        env.ok = payload["passed"]
    if cfg.command == "curlicue":
        env.csv_rows = list(zip(payload["t"], payload["re"], payload["im"]))
    return env


def _cell(v):
    return repr(float(v)) if isinstance(v, float) else json.dumps(v, sort_keys=True) if isinstance(v, (dict, list)) else str(v)


def emit(env: ResultEnvelope, fmt="json") -> str:
    """Serialise an envelope.  CSV numbers use the shortest repr that round-trips."""
    if fmt == "json":
        return json.dumps(env.to_dict(), sort_keys=True, indent=2) + "\n"
    if fmt != "csv":
        raise UsageError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if env.csv_rows is not None:
        writer.writerow(["t", "re", "im"])
        writer.writerows([[_cell(c) for c in row] for row in env.csv_rows])
        return buf.getvalue()
    tables = [k for k, v in env.result.items() if isinstance(v, list) and v and isinstance(v[0], dict)]
    if tables:
        rows = env.result[tables[0]]
        keys = sorted(rows[0])
        writer.writerow(keys)
        writer.writerows([[_cell(r[k]) for k in keys] for r in rows])
    else:
        writer.writerow(["key", "value"])
        writer.writerows([[k, _cell(v)] for k, v in sorted(env.result.items())])
    return buf.getvalue()


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--omega", help="decimal, p/q, or a named constant (sqrt2m1, golden)")
    common.add_argument("--n", type=int, help="product length or Weyl sum length")
    common.add_argument("--lambda", dest="lam", type=float, help="coupling constant")
    common.add_argument("--E", type=float, help="energy (default 0)")
    common.add_argument("--k", type=int, help="coefficient index, alpha_{2k}")
    common.add_argument("--samples", type=int, help="Monte Carlo sample count")
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--nx", type=int, help="x grid size for torus averages")
    common.add_argument("--ny", type=int, help="y grid size for torus averages")
    common.add_argument("--C", type=float, help="approximation constant for the subsequence search")
    common.add_argument("--q-max", dest="q_max", type=int, help="largest denominator searched")
    common.add_argument("--threshold", type=float, help="good-set threshold on (1/n^2) sum_{m<n} |S_m|^2")
    common.add_argument("--m", help="comma-separated list of sum lengths")
    common.add_argument("--cmd", help="weyl-moments sub-task: second, first, parity, pz")
    common.add_argument("--potential", choices=cocycle.POTENTIALS)
    common.add_argument("--method", help="alpha: bruteforce|oracle|closed; weyl-moments first: S|W")
    common.add_argument("--eps", type=float, help="FJK main-term window")
    common.add_argument("--output", "-o")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")
    common.add_argument("--timing", action="store_true", help="add wall time to the envelope")

    parser = argparse.ArgumentParser(prog="weyllab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=COMMAND_HELP[name])
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = RunConfig(**vars(args))
    if cfg.threads is None:
        cfg.threads = default_threads()
    try:
        env = run(cfg)
        text = emit(env, cfg.format)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"weyllab {cfg.command}: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"weyllab {cfg.command}: error: {exc}", file=sys.stderr)
        return 2
    if cfg.output:
        try:
            with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"weyllab: cannot write {cfg.output}: {exc}", file=sys.stderr)
            return 2
    else:
        sys.stdout.write(text)
    return 0 if env.ok else 1


if __name__ == "__main__":
    sys.exit(main())
