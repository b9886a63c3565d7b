"""The fourteen acceptance criteria, each returning a measured pass/fail record.

Every check runs at its stated tolerance.  ``run_all`` executes them in
order; criterion 8 reuses the constants estimated by criterion 7.
"""

from __future__ import annotations

import io
import itertools
import math
import time
from contextlib import redirect_stdout
from dataclasses import dataclass, field

import numpy as np

from . import cocycle, diophantine, perturbation, weyl
from ._parallel import uniform_samples
from .torus import Frequency, TorusPoint

__all__ = ["CriterionResult", "CRITERIA", "run_criterion", "run_all", "format_line"]

SEED = 20240229


def omega_test_set():
    return [Frequency.rational(0, 1), Frequency.rational(1, 2), Frequency.parse("sqrt2m1"),
            Frequency.parse("golden"), Frequency.real(0.123456)]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_dict(self):
        return {"criterion": self.number, "name": self.name, "passed": self.passed,
                "measured": self.measured, "seconds": self.seconds}


def _rel(a, b):
    return abs(a - b) / abs(b)


def c1_alpha2(ctx):
    t0 = time.perf_counter()
    err = max(abs(perturbation.alpha_bruteforce(n, 1, w) - 2 * n)
              for n in range(1, 13) for w in omega_test_set())
    dt = time.perf_counter() - t0
    return err <= 1e-9 and dt < 10.0, {"max_abs_error": err, "runtime_s": dt}


def c2_alpha4(ctx):
    t0 = time.perf_counter()
    err = 0.0
    for n, w in itertools.product(range(2, 13), omega_test_set()):
        err = max(err, _rel(perturbation.alpha_bruteforce(n, 2, w), perturbation.alpha4_closed(n, w)))
    dt = time.perf_counter() - t0
    # n = 1 carries no lambda^4 term: the closed form reports 0 and the brute force refuses k > n
    n1 = all(perturbation.alpha4_closed(1, w) == 0.0 for w in omega_test_set())
    return err <= 1e-9 and dt < 60.0 and n1, {"max_rel_error": err, "runtime_s": dt, "n1_absent": n1}


def c3_oracle(ctx):
    err = odd = 0.0
    for n, w in itertools.product(range(1, 9), omega_test_set()):
        table = perturbation.poly_oracle(n, w)
        odd = max(odd, table.odd_residual)
        for k in range(0, n + 1):
            err = max(err, _rel(perturbation.alpha_bruteforce(n, k, w), table.coeffs[k]))
    return err <= 1e-8 and odd <= 1e-10, {"max_rel_error": err, "max_odd_coefficient": odd}


def c4_beta(ctx):
    rows = uniform_samples(SEED + 4, 100, 4)
    err = 0.0
    for i, (x, y, lam, w) in enumerate(rows):
        n = 1 + i % 8
        lam = 3.0 * lam
        pt = TorusPoint(x, y)
        beta = perturbation.beta_coefficients(n, pt, w)
        series = math.fsum(beta[k] * lam ** (2 * k) for k in range(n + 1))
        trace = math.exp(cocycle.trace_mstar_m(cocycle.cocycle_product(n, lam, 0.0, pt, w)))
        err = max(err, _rel(series, trace))
    return err <= 1e-8, {"max_rel_error": err, "points": 100}


def c5_second_moment(ctx):
    err = max(_rel(weyl.second_moment_check(n), n * (n - 1) / 2) for n in range(2, 41))
    return err <= 1e-10, {"max_rel_error": err}


def c6_omega_avg(ctx):
    err = 0.0
    growth = True
    for n in range(2, 21):
        quad = perturbation.omega_avg_alpha4_quadrature(n)
        err = max(err, _rel(quad, perturbation.omega_avg_alpha4(n)))
        if n >= 10:
            growth &= quad >= 0.4 * n * n
    return err <= 1e-9 and growth, {"max_rel_error": err, "order_n2_growth": growth}


def c7_jvh(ctx):
    t0 = time.perf_counter()
    est = weyl.cjvh_estimate([2000, 8000, 32000], 2000, SEED + 7)
    dt = time.perf_counter() - t0
    vals = [r.estimate for r in est.reports]
    spread = max(abs(a - b) / min(a, b) for a, b in itertools.combinations(vals, 2))
    ctx["jvh"] = est
    ok = spread <= 0.10 and 0.0 < est.c_jvh <= 1.0 and dt < 300.0
    return ok, {"estimates": vals, "max_pairwise_rel_spread": spread, "c_jvh": est.c_jvh,
                "c1": est.c1, "c0": est.c0, "delta": est.delta, "runtime_s": dt}


def c8_goodset(ctx):
    est = ctx.get("jvh") or weyl.cjvh_estimate([2000, 8000, 32000], 2000, SEED + 7)
    thr = est.c1 ** 2 / 16.0
    meas = {n: weyl.good_set_measure(n, thr, 2000, SEED + 8).estimate for n in (512, 2048)}
    ok = all(v >= est.delta / 2.0 for v in meas.values())
    return ok, {"threshold": thr, "half_delta": est.delta / 2.0,
                "measure_512": meas[512], "measure_2048": meas[2048]}


def c9_subsequence(ctx):
    omegas = [float(w) for w in weyl.sample_frequencies(50, SEED + 9)]
    ents = [e for w in omegas for e in diophantine.subsequence_bound_check(w, 64, 5000).entries]
    frac = sum(e.flagged for e in ents) / len(ents) if ents else float("nan")
    above_generic = sum(e.ratio >= e.generic for e in ents) / len(ents) if ents else float("nan")
    best, table = diophantine.smallest_working_c(omegas, 5000)
    ok = bool(ents) and frac >= 0.95
    return ok, {"points": len(ents), "flagged_fraction": frac, "above_generic_fraction": above_generic,
                "smallest_working_C": best,
                "per_C": {str(c): {"flagged": f, "total": t} for c, (f, t) in table.items()}}


def fjk_scan(omegas, q_max=50, eps=0.25):
    """Worst ``||S_m| - |T_m|| / (sqrt(q)(1 + |xi| q))`` and regime ratios over all contexts."""
    worst = 0.0
    lo, hi = math.inf, 0.0
    contexts = points = 0
    for w in omegas:
        for q in range(1, q_max + 1, 2):
            ctx = diophantine.nearest_even_context(w, q)
            if ctx is None or ctx.xi == 0.0:
                continue
            ms = np.arange(1, 4 * q * q + 1)
            ms = ms[np.abs(ms * ctx.xi + ctx.a) <= 1.0 - eps]
            if ms.size == 0:
                continue
            contexts += 1
            points += ms.size
            s = np.abs(weyl.weyl_prefix(int(ms[-1]), w).values[ms - 1])
            t = diophantine.fjk_main_terms(ms, ctx, eps)
            worst = max(worst, float(np.max(np.abs(s - t))) / (math.sqrt(q) * (1 + abs(ctx.xi) * q)))
            regime = (np.abs(ctx.xi) <= 1.0 / (4 * ms)) & (q <= 4 * ms)
            if regime.any():
                r = t[regime] / (ms[regime] / (math.sqrt(q) + ms[regime] * math.sqrt(abs(ctx.xi))))
                lo, hi = min(lo, float(r.min())), max(hi, float(r.max()))
    return worst, lo, hi, contexts, points


def c10_fjk(ctx):
    omegas = [float(w) for w in weyl.sample_frequencies(20, SEED + 10)]
    k, lo, hi, contexts, points = fjk_scan(omegas)
    return k <= 10.0 and contexts > 0, {"empirical_K": k, "budget_K": 10.0, "contexts": contexts,
                                        "points": points, "fitted_c1": lo, "fitted_c2": hi}


def c11_herman(ctx):
    w = Frequency.parse("sqrt2m1")
    vals = {pot: cocycle.lyapunov_mc(10.0, 0.0, w, 10 ** 4, 200, SEED + 11, pot).value
            for pot in ("skew", "amo")}
    target = math.log(10.0) - 0.05
    return all(v >= target for v in vals.values()), {"skew": vals["skew"], "amo": vals["amo"],
                                                      "target": target}


def c12_amo(ctx):
    err = 0.0
    bounded = contrast = True
    out = {}
    for w in (Frequency.rational(0, 1), Frequency.rational(1, 4), Frequency.parse("sqrt2m1")):
        bound = 2.0 / math.cos(math.pi * w.value) ** 2
        closed = [perturbation.amo_alpha2_closed(n, w) for n in range(1, 201)]
        for n, c in enumerate(closed, 1):
            err = max(err, abs(perturbation.amo_alpha_bruteforce(n, 1, w) - c) / max(1.0, abs(c)))
        bounded &= max(closed) <= bound + 1e-9
        first = next((n for n in range(1, 201) if perturbation.alpha2_closed(n) > bound), None)
        contrast &= first is not None
        out[str(w)] = {"max_amo_alpha2": max(closed), "bound": bound, "skew_exceeds_from_n": first}
    ok = err <= 1e-9 and bounded and contrast
    return ok, {"max_rel_error": err, "bounded": bounded, "contrast": contrast, "per_omega": out}


def c13_top(ctx):
    const = perturbation.top_coefficient_constant()
    const_ok = abs(const - 0.25) <= 1e-8
    worst = math.inf
    ok = const_ok
    for n, w in itertools.product(range(1, 11), omega_test_set()):
        top = perturbation.poly_oracle(n, w).coeffs[n]
        worst = min(worst, top / 0.25 ** n)
        ok &= top >= 0.25 ** n
    return ok, {"exp_integral_log_cos2": const, "min_ratio_top_over_bound": worst}


DETERMINISM_RUNS = (
    ["lyapunov", "--lambda", "2.5", "--E", "0.3", "--omega", "sqrt2m1", "--n", "300",
     "--samples", "700", "--seed", "3"],
    ["lyapunov", "--lambda", "1.5", "--omega", "golden", "--n", "300", "--samples", "500",
     "--seed", "3", "--potential", "amo"],
    ["weyl-moments", "--cmd", "first", "--m", "3000", "--samples", "900", "--seed", "5"],
    ["weyl-moments", "--cmd", "pz", "--n", "400", "--samples", "900", "--seed", "5"],
    ["goodset", "--n", "256", "--threshold", "0.002", "--samples", "900", "--seed", "6"],
    ["cjvh", "--m", "1000,2000", "--samples", "300", "--seed", "7"],
    ["curlicue", "--n", "200", "--omega", "golden", "--format", "csv"],
)


def c14_determinism(ctx):
    from . import cli

    def capture(argv):
        buf = io.StringIO()
        with redirect_stdout(buf):
            code = cli.main(argv)
        return code, buf.getvalue()

    mismatched = []
    for argv in DETERMINISM_RUNS:
        a = capture(argv + ["--threads", "1"])
        b = capture(argv + ["--threads", "8"])
        if a != b or a[0] != 0:
            mismatched.append(argv[0])
    return not mismatched, {"runs": len(DETERMINISM_RUNS), "mismatched": mismatched}


CRITERIA = {
    1: ("alpha2 identity", c1_alpha2),
    2: ("alpha4 identity", c2_alpha4),
    3: ("oracle equivalence", c3_oracle),
    4: ("beta resummation", c4_beta),
    5: ("second moment of Z_n", c5_second_moment),
    6: ("omega-averaged alpha4", c6_omega_avg),
    7: ("JvH stability", c7_jvh),
    8: ("good-set measure", c8_goodset),
    9: ("subsequence lower bound", c9_subsequence),
    10: ("FJK accuracy", c10_fjk),
    11: ("Herman bound", c11_herman),
    12: ("AMO contrast", c12_amo),
    13: ("top coefficient", c13_top),
    14: ("determinism", c14_determinism),
}


def run_criterion(number, ctx=None) -> CriterionResult:
    name, func = CRITERIA[number]
    ctx = {} if ctx is None else ctx
    t0 = time.perf_counter()
    passed, measured = func(ctx)
    return CriterionResult(number, name, bool(passed), measured, time.perf_counter() - t0)


def run_all(numbers=None) -> list[CriterionResult]:
    ctx = {}
    return [run_criterion(i, ctx) for i in (numbers or sorted(CRITERIA))]


def _short(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, list):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


def format_line(r: CriterionResult) -> str:
    flat = ", ".join(f"{k}={_short(v)}" for k, v in r.measured.items() if not isinstance(v, dict))
    return f"[{'PASS' if r.passed else 'FAIL'}] criterion {r.number:2d} {r.name}: {flat} ({r.seconds:.1f}s)"
