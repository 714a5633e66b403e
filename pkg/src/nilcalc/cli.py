"""Command-line entry point and scenario runner.

A scenario is a JSON document ``{"name", "kind", "seed", "params"}`` that
fully determines an experiment.  ``run_scenario`` executes it and returns a
:class:`ScenarioReport`; ``emit_report`` serializes the report as text, JSON
records or CSV.  Every CLI command builds a scenario and runs it, so command
output and scenario output share one format.

Exit status: 0 when every check passes, 1 when any check fails, 2 on usage or
input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import random
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from . import bracket as br
from . import equid as eq
from . import freqreg as fr
from . import gowers as gw
from . import nilgroup as ng
from . import nilseq as ns
from . import polyseq as ps
from ._report import Report
from .scalar import PhaseVector, TorusPoint, as_rational, format_rational, signed_frac, torus_norm

KINDS = (
    "norm",
    "bracket-identity",
    "heisenberg-demo",
    "multilin-demo",
    "skew-lift",
    "gcs",
    "equid",
    "freqreg",
    "schema-verify",
    "polyalg",
)


class ScenarioError(ValueError):
    """The scenario document does not validate."""


@dataclass
class Check:
    name: str
    ok: bool
    measured: Any = None
    threshold: Any = None
    witness: Any = None


@dataclass
class ScenarioReport:
    name: str
    kind: str
    seed: Optional[int]
    inputs: dict
    checks: List[Check] = field(default_factory=list)
    table: List[dict] = field(default_factory=list)
    runtime: float = 0.0  # wall time; shown in text output only

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def exit_status(self) -> int:
        return 0 if self.ok else 1

    def check(self, name: str, ok: bool, measured=None, threshold=None, witness=None) -> Check:
        c = Check(name, bool(ok), measured, threshold, witness)
        self.checks.append(c)
        return c


# --------------------------------------------------------------------------
# serialization


def plain(x: Any) -> Any:
    """JSON-ready copy: rationals as "p/q", floats at 15 significant digits."""
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, Fraction):
        return format_rational(x)
    if isinstance(x, TorusPoint):
        return format_rational(x.value)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return float(f"{x:.15g}")
    if isinstance(x, ng.GroupElement):
        return [format_rational(c) for c in x.coords]
    if isinstance(x, ng.HorizontalChar):
        return list(x.coeffs)
    if isinstance(x, PhaseVector):
        return {"amps": plain(list(x.amps)), "phases": plain(list(x.phases))}
    if isinstance(x, Report):
        return {"ok": x.ok, "check": x.check, "failure": x.failure, "witness": plain(x.witness),
                "data": plain(x.data)}
    if isinstance(x, dict):
        return {str(k): plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [plain(v) for v in x]
    if hasattr(x, "to_dict"):
        return plain(x.to_dict())
    return str(x)


def _text_value(x: Any) -> str:
    v = plain(x)
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True)
    return str(v)


def report_to_dict(r: ScenarioReport) -> dict:
    return {
        "scenario": r.name,
        "kind": r.kind,
        "seed": r.seed,
        "verdict": "pass" if r.ok else "fail",
        "inputs": plain(r.inputs),
        "checks": [
            {"name": c.name, "ok": c.ok, "measured": plain(c.measured),
             "threshold": plain(c.threshold), "witness": plain(c.witness)}
            for c in r.checks
        ],
        "table": plain(r.table),
    }


def emit_report(r: ScenarioReport, fmt: str = "text") -> bytes:
    """Serialize deterministically; only the text form carries the runtime."""
    if fmt == "json":
        return (json.dumps(report_to_dict(r), sort_keys=True, indent=2) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if r.table:
            cols = list(r.table[0].keys())
            w.writerow(cols)
            for row in r.table:
                w.writerow([_text_value(row.get(c)) for c in cols])
        else:
            w.writerow(["check", "ok", "measured", "threshold"])
            for c in r.checks:
                w.writerow([c.name, "pass" if c.ok else "fail", _text_value(c.measured), _text_value(c.threshold)])
        return buf.getvalue().encode()
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    lines = [f"scenario {r.name} ({r.kind}), seed {r.seed}"]
    for c in r.checks:
        line = f"  {'PASS' if c.ok else 'FAIL'} {c.name}: measured {_text_value(c.measured)}"
        if c.threshold is not None:
            line += f", threshold {_text_value(c.threshold)}"
        lines.append(line)
        if not c.ok and c.witness is not None:
            lines.append(f"       witness: {_text_value(c.witness)}")
    lines.append(f"verdict: {'pass' if r.ok else 'fail'}  ({r.runtime:.2f} s)")
    return ("\n".join(lines) + "\n").encode()


# --------------------------------------------------------------------------
# parameter helpers


def _rat(x) -> Fraction:
    return as_rational(x if not isinstance(x, float) else str(x))


def _random_rational(rng: random.Random, den_min: int, den_max: int) -> Fraction:
    while True:
        den = rng.randint(den_min + 1, den_max)
        a = Fraction(rng.randint(1, den - 1), den)
        if a.denominator > den_min:
            return a


def _pairs(p: dict, rng: random.Random, default_count: int) -> List[tuple]:
    if "alpha" in p:
        return [(_rat(p["alpha"]), _rat(p["beta"]))]
    count = int(p.get("count", default_count))
    lo, hi = int(p.get("den_min", 10 ** 4)), int(p.get("den_max", 10 ** 6))
    return [(_random_rational(rng, lo, hi), _random_rational(rng, lo, hi)) for _ in range(count)]


def parse_function_spec(spec: str, N: int) -> gw.SampledFunction:
    """``const:c``, ``phase:c0,c1,...`` (e(sum c_i n^i)), ``bracket:alpha,beta``
    (e({alpha n} beta n)) or a path to a CSV file."""
    if ":" in spec and not Path(spec).exists():
        head, body = spec.split(":", 1)
        vals = [as_rational(v.strip()) for v in body.split(",") if v.strip()]
        if head == "const":
            c = vals[0] if vals else Fraction(1)
            return gw.SampledFunction(N, np.full(N, float(c), dtype=complex), abs(float(c)))
        if head == "phase":
            return gw.phase_poly_function(vals, N)
        if head == "bracket":
            a, b = vals
            return gw.SampledFunction.from_phase_fn(N, lambda n: signed_frac(a * n) * b * n)
        raise ScenarioError(f"unknown function spec {head!r}")
    f = gw.SampledFunction.from_csv(Path(spec).read_text())
    return f


def parse_orbit(spec: str) -> ps.PolySeq:
    """``torus:c0,c1,...;...`` (one polynomial per coordinate),
    ``heisenberg:alpha,beta`` or a JSON file written by polyseq_to_dict."""
    if ":" in spec and not Path(spec).exists():
        head, body = spec.split(":", 1)
        if head == "torus":
            rows = [[as_rational(v) for v in r.split(",") if v.strip()] for r in body.split(";")]
            return eq.torus_orbit(rows)
        if head == "heisenberg":
            a, b = (as_rational(v) for v in body.split(","))
            return ns.heisenberg_orbit(a, b)
        raise ScenarioError(f"unknown orbit spec {head!r}")
    doc = json.loads(Path(spec).read_text())
    return ps.polyseq_from_dict(doc, ng.schema_from_ref(doc["schema"]))


# --------------------------------------------------------------------------
# experiment kinds


def _run_norm(r: ScenarioReport, p: dict, rng: random.Random) -> None:
    mode = p.get("mode", "single")
    if mode == "single":
        N, d = int(p["N"]), int(p["d"])
        f = parse_function_spec(str(p["f"]), N)
        Nt = p.get("Ntilde")
        Nt = 2 ** d * N if Nt is None else int(Nt)
        val = gw.u_norm(f, d, Nt)
        r.table.append({"N": N, "d": d, "Ntilde": Nt, "norm": val})
        if "expected" in p:
            tol = float(p.get("tol", 1e-12))
            r.check("norm", abs(val - float(p["expected"])) <= tol, val, {"expected": p["expected"], "tol": tol})
        elif "min_norm" in p:
            r.check("norm", val >= float(p["min_norm"]), val, {"min": p["min_norm"]})
        else:
            r.check("norm", True, val)
    elif mode == "extremal":
        N, tol = int(p.get("N", 128)), float(p.get("tol", 1e-9))
        worst, witness = 0.0, None
        for s in p.get("s_values", [1, 2, 3]):
            for _ in range(int(p.get("count", 20))):
                deg = rng.randint(1, s)
                coeffs = [_random_rational(rng, 1, int(p.get("den_max", 1000))) * rng.choice((1, -1))
                          for _ in range(deg + 1)]
                val = gw.u_norm(gw.phase_poly_function(coeffs, N), s + 1)
                r.table.append({"s": s, "N": N, "coeffs": coeffs, "norm": val})
                if abs(val - 1) > worst:
                    worst, witness = abs(val - 1), {"s": s, "coeffs": coeffs, "norm": val}
        r.check("extremal-phase-polynomials", worst <= tol, worst, tol, witness)
    elif mode == "oracle":
        _run_norm_oracle(r, p, rng)
    elif mode == "converse":
        _run_norm_converse(r, p, rng)
    else:
        raise ScenarioError(f"unknown norm mode {mode!r}")


def _run_norm_oracle(r: ScenarioReport, p: dict, rng: random.Random) -> None:
    count = int(p.get("count", 20))
    max_nt = int(p.get("max_Ntilde", 64))
    d_max = int(p.get("d_max", 3))
    tol, inv_tol = float(p.get("tol", 1e-12)), float(p.get("invariance_tol", 1e-9))
    nprng = np.random.default_rng(rng.randint(0, 2 ** 31))
    funcs = []
    for i in range(count):
        N = 1 + i % (max_nt // 2 ** d_max)
        funcs.append(gw.random_bounded(N, 1 + i % 2, nprng))
    worst, witness = 0.0, None
    worst_inv, inv_witness = 0.0, None

    def compare(i, f, d, Nt):
        nonlocal worst, witness
        fast, naive = gw.u_norm(f, d, Nt), gw.u_norm_naive(f, d, Nt)
        r.table.append({"function": i, "N": f.N, "d": d, "Ntilde": Nt, "norm": fast, "naive": naive})
        if abs(fast - naive) > worst:
            worst, witness = abs(fast - naive), {"function": i, "N": f.N, "d": d, "Ntilde": Nt}

    for d in range(1, d_max + 1):
        for i, f in enumerate(funcs):
            lo = 2 ** d * f.N
            for Nt in range(lo, max_nt + 1):
                compare(i, f, d, Nt)
            ref, shifted = gw.u_norm(f, d), gw.u_norm(f, d, lo + 17)
            if abs(ref - shifted) > worst_inv:
                worst_inv, inv_witness = abs(ref - shifted), {"function": i, "d": d}
    r.check("oracle-equivalence", worst <= tol, worst, tol, witness)
    r.check("ntilde-invariance", worst_inv <= inv_tol, worst_inv, inv_tol, inv_witness)


def _run_norm_converse(r: ScenarioReport, p: dict, rng: random.Random) -> None:
    d = int(p.get("d", 3))
    Ns = [int(v) for v in p.get("N_values", [128, 256, 512])]
    min_norm, max_var = float(p.get("min_norm", 0.1)), float(p.get("max_variation", 0.2))
    low, worst_var, wit_low, wit_var = math.inf, 0.0, None, None
    for a, b in _pairs(p, rng, 5):
        vals = []
        for N in Ns:
            f = gw.SampledFunction.from_phase_fn(N, lambda n: signed_frac(a * n) * b * n)
            v = gw.u_norm(f, d)
            vals.append(v)
            r.table.append({"alpha": a, "beta": b, "N": N, "d": d, "Ntilde": 2 ** d * N, "norm": v})
        if min(vals) < low:
            low, wit_low = min(vals), {"alpha": a, "beta": b, "norms": vals}
        var = (max(vals) - min(vals)) / max(vals)
        if var > worst_var:
            worst_var, wit_var = var, {"alpha": a, "beta": b, "norms": vals}
    r.check("converse-lower-bound", low >= min_norm, low, min_norm, wit_low)
    r.check("converse-stability", worst_var < max_var, worst_var, max_var, wit_var)


def _run_bracket_identity(r: ScenarioReport, p: dict, rng: random.Random) -> None:
    n_max = int(p.get("n_max", 200))
    if "alpha" in p:
        pairs = [(_rat(p["alpha"]), _rat(p["beta"]))]
    else:
        dm = int(p.get("den_max", 10 ** 6))
        pairs = [(Fraction(rng.randint(-dm, dm), rng.randint(1, dm)), Fraction(rng.randint(-dm, dm), rng.randint(1, dm)))
                 for _ in range(int(p.get("count", 1000)))]
    failures = 0
    witness = None
    for a, b in pairs:
        rep = br.check_product_identity(a, b, n_max)
        if not rep.ok:
            failures += 1
            witness = witness or {"alpha": a, "beta": b, "at": rep.witness}
    r.check("product-identity", failures == 0, {"pairs": len(pairs), "failures": failures}, 0, witness)


def _bracket_demo_spec(orbit: str, a, b):
    if orbit == "heisenberg":
        return br.bracket_ab(a, b), ns.heisenberg_spec(a, b)
    if orbit == "degrank32":
        return br.bracket_a2b(a, b), ns.degrank32_spec(a, b)
    raise ScenarioError(f"unknown orbit {orbit!r}")


def _run_heisenberg(r: ScenarioReport, p: dict, rng: random.Random) -> None:
    N = int(p.get("N", 1000))
    orbit = p.get("orbit", "heisenberg")
    bad, flagged, witness = 0, 0, None
    pairs = _pairs(p, rng, 50)
    for a, b in pairs:
        e, spec = _bracket_demo_spec(orbit, a, b)
        rep = br.compare_with_nilchar(e, spec, N)
        flagged += rep.data.get("flagged", 0)
        r.table.append({"alpha": a, "beta": b, "N": N, "ok": rep.ok, "flagged": rep.data.get("flagged", 0)})
        if not rep.ok:
            bad += 1
            witness = witness or {"alpha": a, "beta": b, "failure": rep.failure, "at": rep.witness}
    r.check(f"{orbit}-bracket-match", bad == 0, {"pairs": len(pairs), "mismatched_pairs": bad,
                                                   "flagged_points": flagged}, 0, witness)


def _run_multilin(r: ScenarioReport, p: dict, rng: random.Random) -> None:
    N = int(p.get("N", 500))
    bad, bad_sym, flagged = 0, 0, 0
    wit = wit_sym = None
    for a, b in _pairs(p, rng, 5):
        rep = br.compare_with_nilchar(br.multilinear_diagonal(a, b), ns.appC_spec(a, b), N)
        flagged += rep.data.get("flagged", 0)
        if not rep.ok:
            bad += 1
            wit = wit or {"alpha": a, "beta": b, "failure": rep.failure, "at": rep.witness}
        sym, ref = br.symmetrized(a, b), br.bracket_ab(a, b)
        for n in range(1, N + 1):
            if br.eval_bracket(sym, (n, n)) != br.eval_bracket(ref, n):
                bad_sym += 1
                wit_sym = wit_sym or {"alpha": a, "beta": b, "n": n}
                break
    r.check("appC-diagonal", bad == 0, {"mismatched_pairs": bad, "flagged_points": flagged}, 0, wit)
    r.check("symmetrized-diagonal", bad_sym == 0, {"mismatched_pairs": bad_sym}, 0, wit_sym)


def _run_skew_lift(r: ScenarioReport, p: dict, rng: random.Random) -> None:
    n_max, side = int(p.get("n_max", 500)), p.get("side", "left")
    if "alpha" in p:
        triples = [(_rat(p["alpha"]), _rat(p["beta"]), _rat(p.get("gamma", 0)))]
    else:
        dm = int(p.get("den_max", 1000))
        triples = [tuple(Fraction(rng.randint(-dm, dm), rng.randint(1, dm)) for _ in range(3))
                   for _ in range(int(p.get("count", 20)))]
    bad, witness = 0, None
    for a, b, c in triples:
        for n, v in enumerate(ns.linear_lift_orbit(a, b, c, n_max, side)):
            want = ns.linear_lift_closed_form(a, b, c, n, side)
            if v != want:
                bad += 1
                witness = witness or {"alpha": a, "beta": b, "gamma": c, "n": n, "orbit": v, "closed_form": want}
                break
    r.check("skew-lift-closed-form", bad == 0, {"triples": len(triples), "failures": bad}, 0, witness)


def _run_gcs(r: ScenarioReport, p: dict, rng: random.Random) -> None:
    N = int(p.get("N", 512))
    a = _rat(p["alpha"]) if "alpha" in p else _random_rational(rng, 10 ** 4, 10 ** 6)
    tol = float(p.get("tol", 1e-12))
    h_max = int(p.get("h_max", N // 4))
    if "quad" in p:
        quads = [tuple(int(v) for v in p["quad"])]
        nons: List[tuple] = []
    else:
        quads, nons = [], []
        while len(quads) < int(p.get("n_quads", 100)):
            h1, h2, h3 = (rng.randint(-h_max, h_max) for _ in range(3))
            h4 = h1 + h2 - h3
            if abs(h4) <= h_max:
                quads.append((h1, h2, h3, h4))
        while len(nons) < int(p.get("n_non", 100)):
            q = tuple(rng.randint(-h_max, h_max) for _ in range(4))
            s = q[0] + q[1] - q[2] - q[3]
            if s != 0 and torus_norm(2 * a * s) != 0:
                nons.append(q)
    hs = sorted({h for q in quads + nons for h in q})
    fam = gw.quadratic_family(a, N, hs)
    worst, wit = 0.0, None
    for q in quads:
        if q[0] + q[1] != q[2] + q[3]:
            raise ScenarioError(f"{q} is not an additive quadruple")
        v = gw.gcs_statistic(fam, q)
        err = abs(v - gw.gcs_quadruple_value(q, N))
        r.table.append({"h1": q[0], "h2": q[1], "h3": q[2], "h4": q[3], "statistic": v, "quadruple": True})
        if err > worst:
            worst, wit = err, {"quad": q, "statistic": v}
    r.check("gcs-quadruples", worst <= tol, worst, tol, wit)
    if nons:
        excess, wit2 = -math.inf, None
        for q in nons:
            v = gw.gcs_statistic(fam, q)
            bound = gw.gcs_nonquadruple_bound(a, q, N)
            r.table.append({"h1": q[0], "h2": q[1], "h3": q[2], "h4": q[3], "statistic": v, "quadruple": False})
            if v - bound > excess:
                excess, wit2 = v - bound, {"quad": q, "statistic": v, "bound": bound}
        r.check("gcs-non-quadruples", excess <= 0, excess, 0, wit2)


def _run_equid(r: ScenarioReport, p: dict, rng: random.Random) -> None:
    mode = p.get("mode", "single")
    if mode == "single":
        g = parse_orbit(p["orbit"])
        if p.get("schema") and ng.schema_from_ref(p["schema"]).name != g.schema.name:
            raise ScenarioError(f"orbit lives on {g.schema.name}, not {p['schema']}")
        N, H, C = int(p.get("N", 1000)), int(p.get("H", 10)), _rat(p.get("C", 1))
        rep = eq.leibman_test(g, N, H, C)
        r.table.append(rep.to_dict())
        if "expect" in p:
            r.check("leibman", rep.verdict == p["expect"], rep.to_dict(), p["expect"])
        else:
            r.check("leibman", True, rep.to_dict())
        if p.get("char_height"):
            emp = eq.empirical_distribution_test(g, N, int(p["char_height"]), p.get("threshold"))
            r.check("empirical-distribution", emp.ok, emp.data.get("max_average"), p.get("threshold"),
                    emp.data.get("character"))
        return
    if mode != "acceptance":
        raise ScenarioError(f"unknown equid mode {mode!r}")
    N = int(p.get("N", 1000))
    for case in p.get("forced", []):
        alpha = _rat(case["alpha"])
        rep = eq.leibman_test(eq.torus_orbit([[0, alpha]]), N, int(case.get("H", 5)), _rat(case.get("C", 1)))
        want_xi = tuple(case["xi"]) if "xi" in case else None
        want_sm = _rat(case["smoothness"]) if "smoothness" in case else None
        ok = rep.obstructed and (want_xi is None or rep.witness.coeffs == want_xi) and (
            want_sm is None or rep.smoothness == want_sm)
        r.check(f"forced-obstruction alpha={format_rational(alpha)}", ok, rep.to_dict(),
                {"xi": want_xi, "smoothness": want_sm})
    gen = p.get("generic", {})
    H, C = int(gen.get("H", 10)), _rat(gen.get("C", 10))
    found = []
    for _ in range(int(gen.get("count", 5))):
        alpha = eq.generic_frequency(rng, N, 1, int(gen.get("Q0", 16)))
        rep = eq.leibman_test(eq.torus_orbit([[0, alpha]]), N, H, C)
        r.table.append({"alpha": alpha, **rep.to_dict()})
        if rep.obstructed:
            found.append({"alpha": alpha, **rep.to_dict()})
    r.check("generic-no-obstruction", not found, len(found), 0, found[0] if found else None)
    emp = p.get("empirical")
    if emp:
        Ne = int(emp.get("N", 4096))
        a = eq.generic_frequency(rng, Ne, 1)
        b = eq.generic_frequency(rng, Ne, 1)
        rep = eq.empirical_distribution_test(ns.heisenberg_orbit(a, b), Ne, int(emp.get("char_height", 3)),
                                             float(emp.get("threshold", 0.15)))
        r.check("heisenberg-discrepancy", rep.ok, rep.data["max_average"], rep.data["threshold"],
                {"alpha": a, "beta": b, "character": rep.data["character"]})


def _run_freqreg(r: ScenarioReport, p: dict, rng: random.Random) -> None:
    if "freqs" in p:
        freqs = p["freqs"]
        xs = fr.parse_freqs(freqs) if isinstance(freqs, str) else [TorusPoint(_rat(v)) for v in freqs]
        cases = [(xs, _rat(p.get("eps", 0)), int(p.get("H", fr.DEFAULT_H)), int(p.get("Q", fr.DEFAULT_Q)))]
    else:
        cases = fr.suite_cases(int(p.get("count", 30)), int(p.get("suite_seed", 0)))
    rep_fail = ind_fail = idem_fail = 0
    wit: Dict[str, Any] = {}
    for xs, eps, H, Q in cases:
        d = fr.regularize(xs, eps, H, Q)
        v = d.verify()
        r.table.append({"eps": eps, "H": H, "Q": Q, **d.to_dict()})
        if not v.ok and v.failure == "representation":
            rep_fail += 1
            wit.setdefault("representation", v.witness)
        elif not v.ok:
            ind_fail += 1
            wit.setdefault("independence", v.witness)
        d2 = fr.regularize(d.independent, eps, H, Q)
        if d2.independent != d.independent or d2.rational or d2.small:
            idem_fail += 1
            wit.setdefault("idempotence", d.to_dict())
    r.check("exact-representation", rep_fail == 0, {"cases": len(cases), "failures": rep_fail}, 0,
            wit.get("representation"))
    r.check("certified-independence", ind_fail == 0, {"cases": len(cases), "failures": ind_fail}, 0,
            wit.get("independence"))
    r.check("idempotence", idem_fail == 0, {"cases": len(cases), "failures": idem_fail}, 0, wit.get("idempotence"))


def _run_schema_verify(r: ScenarioReport, p: dict, rng: random.Random) -> None:
    for ref in p.get("schemas", ["heisenberg"]):
        s = ng.schema_from_ref(ref)
        rep = ng.verify_schema(s, int(p.get("samples", 200)), seed=rng.randint(0, 2 ** 31))
        r.check(f"schema {s.name}", rep.ok, rep.data if rep.ok else rep.failure, None, rep.witness)


def _run_polyalg(r: ScenarioReport, p: dict, rng: random.Random) -> None:
    n_taylor, n_prod, n_cubes = int(p.get("taylor_count", 200)), int(p.get("product_count", 2)), int(
        p.get("cube_count", 200))
    for ref in p.get("schemas", ["heisenberg"]):
        s = ng.schema_from_ref(ref)
        k = s.domain_dim
        J = ps.full_downset(s, k)
        grid = ps.grid_for(J, k)
        bad = 0
        wit = None
        for _ in range(n_taylor):
            g = ps.random_polyseq(s, rng)
            samples = {q: g(q if k > 1 else q[0]) for q in grid}
            try:
                back = ps.taylor_extract(samples, s, J)
            except ps.TaylorError as exc:
                back, wit = None, wit or str(exc)
            if back != g:
                bad += 1
                wit = wit or ps.polyseq_to_dict(g)
        r.check(f"taylor-roundtrip {s.name}", bad == 0, {"forms": n_taylor, "failures": bad}, 0, wit)
        top = max(sum(j) for j in J)
        bad, wit = 0, None
        for _ in range(n_prod):
            prod = ps.pointwise_product(ps.random_polyseq(s, rng), ps.random_polyseq(s, rng))
            rep = ps.verify_polynomial(prod, top + 1, int(p.get("h_range", 2)), seed=rng.randint(0, 2 ** 31))
            if not rep.ok:
                bad += 1
                wit = wit or rep.witness
        r.check(f"product-polynomial {s.name}", bad == 0, {"products": n_prod, "failures": bad}, 0, wit)
        bad, wit = 0, None
        g = ps.random_polyseq(s, rng)
        for _ in range(n_cubes):
            degs, pts = ps.random_domain_cube(s, k, rng.randint(1, int(p.get("max_order", 3))), rng)
            ok, _ = ps.hk_membership(ps.image_cube(g, pts, degs))
            if not ok:
                bad += 1
                wit = wit or {"degrees": degs, "points": pts}
        r.check(f"image-cubes {s.name}", bad == 0, {"cubes": n_cubes, "failures": bad}, 0, wit)


_RUNNERS: Dict[str, Callable[[ScenarioReport, dict, random.Random], None]] = {
    "norm": _run_norm,
    "bracket-identity": _run_bracket_identity,
    "heisenberg-demo": _run_heisenberg,
    "multilin-demo": _run_multilin,
    "skew-lift": _run_skew_lift,
    "gcs": _run_gcs,
    "equid": _run_equid,
    "freqreg": _run_freqreg,
    "schema-verify": _run_schema_verify,
    "polyalg": _run_polyalg,
}


def validate_scenario(doc: Any) -> dict:
    if not isinstance(doc, dict):
        raise ScenarioError("a scenario must be a JSON object")
    kind = doc.get("kind")
    if kind not in _RUNNERS:
        raise ScenarioError(f"unknown experiment kind {kind!r}; expected one of {', '.join(KINDS)}")
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise ScenarioError("params must be an object")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise ScenarioError("seed must be an integer")
    return {"name": str(doc.get("name", kind)), "kind": kind, "seed": seed, "params": params}


def run_scenario(doc: dict) -> ScenarioReport:
    """Execute a scenario.  Invariant violations become failing checks."""
    sc = validate_scenario(doc)
    r = ScenarioReport(sc["name"], sc["kind"], sc["seed"], {"params": sc["params"]})
    rng = random.Random(sc["seed"])
    t0 = time.perf_counter()
    try:
        _RUNNERS[sc["kind"]](r, sc["params"], rng)
    except ScenarioError:
        raise
    except ValueError as exc:
        # bad parameters: unknown schema, Ntilde too small, malformed rationals
        raise ScenarioError(str(exc)) from exc
    except (ArithmeticError, AssertionError, ns.CoverageError) as exc:
        r.check("invariant", False, type(exc).__name__, None, str(exc))
    r.runtime = time.perf_counter() - t0
    return r


def bundled_scenarios() -> List[str]:
    root = resources.files("nilcalc") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_scenario(ref: str) -> dict:
    """A scenario from a file path or the name of a bundled scenario."""
    path = Path(ref)
    if path.exists():
        text = path.read_text()
    else:
        name = ref[:-5] if ref.endswith(".json") else ref
        res = resources.files("nilcalc") / "scenarios" / f"{name}.json"
        if not res.is_file():
            raise ScenarioError(f"no scenario file or bundled scenario named {ref!r}")
        text = res.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc


# --------------------------------------------------------------------------
# argparse front end


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nilcalc", description="Exact nilpotent-group and Gowers-norm experiments.")
    ap.add_argument("--format", choices=("text", "json", "csv"), default="text")
    # also accepted after the subcommand; SUPPRESS keeps the top-level default
    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=("text", "json", "csv"), default=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)

    def norm_args(p):
        p.add_argument("--d", type=int, required=True)
        p.add_argument("--N", type=int, required=True)
        p.add_argument("--f", required=True, help="const:c | phase:c0,c1,... | bracket:a,b | CSV file")
        p.add_argument("--Ntilde", type=int)
        p.add_argument("--expected")
        p.add_argument("--tol", type=float, default=1e-12)

    def gcs_args(p):
        p.add_argument("--family", required=True, help="quadratic:alpha")
        p.add_argument("--N", type=int, required=True)
        p.add_argument("--quad", required=True, help="h1,h2,h3,h4")

    norm_args(sub.add_parser("norm", parents=[fmt], help="Gowers U^d[N] norm of a function"))
    p = sub.add_parser("gowers", parents=[fmt], help="the norm and gcs commands, grouped")
    gs = p.add_subparsers(dest="action", required=True)
    norm_args(gs.add_parser("norm", parents=[fmt]))
    gcs_args(gs.add_parser("gcs", parents=[fmt]))

    p = sub.add_parser("bracket", parents=[fmt], help="bracket polynomial tools")
    bs = p.add_subparsers(dest="action", required=True)
    q = bs.add_parser("check-identity", parents=[fmt])
    q.add_argument("--alpha", required=True)
    q.add_argument("--beta", required=True)
    q.add_argument("--n-max", type=int, default=200)
    q = bs.add_parser("compare", parents=[fmt])
    q.add_argument("--orbit", choices=("heisenberg", "degrank32"), default="heisenberg")
    q.add_argument("--alpha", required=True)
    q.add_argument("--beta", required=True)
    q.add_argument("--N", type=int, default=1000)
    q = bs.add_parser("eval", parents=[fmt])
    q.add_argument("--expr", required=True, help="prefix expression, e.g. '(frac (* (const 1/3) (var 0)))'")
    q.add_argument("--n", required=True, help="comma-separated integer arguments")

    p = sub.add_parser("heisenberg", parents=[fmt], help="Heisenberg nilcharacter vs e({alpha n} beta n)")
    p.add_argument("--alpha", required=True)
    p.add_argument("--beta", required=True)
    p.add_argument("--N", type=int, default=1000)

    p = sub.add_parser("multilin", parents=[fmt], help="two-variable multilinearisation demo")
    p.add_argument("--alpha", required=True)
    p.add_argument("--beta", required=True)
    p.add_argument("--N", type=int, default=500)

    p = sub.add_parser("lift", parents=[fmt], help="skew-torus lift of a quadratic phase")
    p.add_argument("--alpha", required=True)
    p.add_argument("--beta", required=True)
    p.add_argument("--gamma", default="0")
    p.add_argument("--n-max", type=int, default=500)
    p.add_argument("--side", choices=("left", "right"), default="left")

    gcs_args(sub.add_parser("gcs", parents=[fmt], help="additive-quadruple statistic for the quadratic family"))

    p = sub.add_parser("nilchar", parents=[fmt], help="nilcharacter evaluation")
    ns_ = p.add_subparsers(dest="action", required=True)
    for name in ("eval", "dump"):
        q = ns_.add_parser(name, parents=[fmt])
        q.add_argument("--orbit", required=True, help="heisenberg:a,b | degrank32:a,b | spec JSON file")
        q.add_argument("--smoothed", action="store_true")
        q.add_argument("--radius", default=None, help="chart radius, at most 1/8")
        q.add_argument("--eta", type=int, default=-1, help="vertical frequency")
        if name == "eval":
            q.add_argument("--N", type=int, required=True)

    p = sub.add_parser("equid", parents=[fmt], help="equidistribution tests")
    es = p.add_subparsers(dest="action", required=True)
    q = es.add_parser("test", parents=[fmt])
    q.add_argument("--schema", help="optional check that the orbit lives on this schema")
    q.add_argument("--orbit", required=True, help="torus:c0,c1;... | heisenberg:a,b | polyseq JSON")
    q.add_argument("--N", type=int, required=True)
    q.add_argument("--height", type=int, default=10)
    q.add_argument("--C", default="1")
    q.add_argument("--char-height", type=int, default=0)
    q.add_argument("--threshold", type=float)

    p = sub.add_parser("freqreg", parents=[fmt], help="frequency regularization")
    fs = p.add_subparsers(dest="action", required=True)
    q = fs.add_parser("run", parents=[fmt])
    q.add_argument("--freqs", required=True, help="p1/q1,p2/q2,...")
    q.add_argument("--eps", default="0")
    q.add_argument("--H", type=int, default=fr.DEFAULT_H)
    q.add_argument("--Q", type=int, default=fr.DEFAULT_Q)

    p = sub.add_parser("schema", parents=[fmt], help="catalog schemas")
    ss = p.add_subparsers(dest="action", required=True)
    for name in ("verify", "show", "dump"):
        q = ss.add_parser(name, parents=[fmt])
        q.add_argument("ref", help="catalog reference, e.g. heisenberg or torus(2,3), or a schema JSON file")
        if name == "verify":
            q.add_argument("--samples", type=int, default=200)

    p = sub.add_parser("scenario", parents=[fmt], help="run scenario files")
    cs = p.add_subparsers(dest="action", required=True)
    q = cs.add_parser("run", parents=[fmt])
    q.add_argument("scenario", help="scenario file or bundled scenario name")
    cs.add_parser("list", parents=[fmt])
    return ap


def _load_schema(ref: str) -> ng.NilSchema:
    path = Path(ref)
    if path.exists():
        return ng.loads_schema(path.read_text())
    return ng.schema_from_ref(ref)


def _nilchar_spec(args) -> ns.NilcharSpec:
    path = Path(args.orbit)
    if path.exists():
        return ns.spec_from_dict(json.loads(path.read_text()))
    head, _, rest = args.orbit.partition(":")
    vals = [v for v in rest.split(",") if v.strip()]
    if head not in ("heisenberg", "degrank32") or len(vals) != 2:
        raise ScenarioError("--orbit must be heisenberg:a,b, degrank32:a,b or a spec JSON file")
    a, b = (_rat(v) for v in vals)
    if head == "heisenberg":
        radius = ns.DEFAULT_RADIUS if args.radius is None else _rat(args.radius)
        return ns.heisenberg_spec(a, b, smoothed=args.smoothed, eta=args.eta, radius=radius)
    if args.radius is not None:
        raise ScenarioError("--radius is only supported for heisenberg orbits")
    return ns.degrank32_spec(a, b, smoothed=args.smoothed, eta=args.eta)


def _scenario_for(args) -> Optional[dict]:
    c = args.command
    if c == "gowers":
        c = args.action
    if c == "norm":
        params = {"mode": "single", "N": args.N, "d": args.d, "f": args.f}
        if args.Ntilde is not None:
            params["Ntilde"] = args.Ntilde
        if args.expected is not None:
            params.update(expected=float(args.expected), tol=args.tol)
        return {"name": "norm", "kind": "norm", "params": params}
    if c == "bracket" and args.action == "check-identity":
        return {"name": "bracket-identity", "kind": "bracket-identity",
                "params": {"alpha": args.alpha, "beta": args.beta, "n_max": args.n_max}}
    if c == "bracket" and args.action == "compare":
        return {"name": f"bracket-compare-{args.orbit}", "kind": "heisenberg-demo",
                "params": {"orbit": args.orbit, "alpha": args.alpha, "beta": args.beta, "N": args.N}}
    if c == "heisenberg":
        return {"name": "heisenberg-demo", "kind": "heisenberg-demo",
                "params": {"alpha": args.alpha, "beta": args.beta, "N": args.N}}
    if c == "multilin":
        return {"name": "multilin-demo", "kind": "multilin-demo",
                "params": {"alpha": args.alpha, "beta": args.beta, "N": args.N}}
    if c == "lift":
        return {"name": "skew-lift", "kind": "skew-lift",
                "params": {"alpha": args.alpha, "beta": args.beta, "gamma": args.gamma,
                           "n_max": args.n_max, "side": args.side}}
    if c == "gcs":
        head, _, alpha = args.family.partition(":")
        if head != "quadratic" or not alpha:
            raise ScenarioError("only the family 'quadratic:alpha' is supported")
        quad = [int(v) for v in args.quad.split(",")]
        if len(quad) != 4:
            raise ScenarioError("--quad needs four integers")
        return {"name": "gcs", "kind": "gcs", "params": {"alpha": alpha, "N": args.N, "quad": quad}}
    if c == "equid":
        params = {"mode": "single", "orbit": args.orbit, "N": args.N, "H": args.height, "C": args.C}
        if args.schema:
            params["schema"] = args.schema
        if args.char_height:
            params["char_height"] = args.char_height
            if args.threshold is not None:
                params["threshold"] = args.threshold
        return {"name": "equid", "kind": "equid", "params": params}
    if c == "freqreg":
        return {"name": "freqreg", "kind": "freqreg",
                "params": {"freqs": args.freqs, "eps": args.eps, "H": args.H, "Q": args.Q}}
    if c == "schema" and args.action == "verify":
        return {"name": "schema-verify", "kind": "schema-verify",
                "params": {"schemas": [args.ref], "samples": args.samples}}
    if c == "scenario" and args.action == "run":
        return load_scenario(args.scenario)
    return None


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    out = sys.stdout.buffer if hasattr(sys.stdout, "buffer") else None

    def write(data: bytes) -> None:
        if out is not None:
            out.write(data)
            out.flush()
        else:
            sys.stdout.write(data.decode())

    try:
        if args.command == "bracket" and args.action == "eval":
            e = br.parse_bracket(args.expr)
            n = tuple(int(v) for v in args.n.split(","))
            write(f"{format_rational(br.eval_bracket(e, n))}\n".encode())
            return 0
        if args.command == "nilchar":
            spec = _nilchar_spec(args)
            if args.action == "dump":
                write((json.dumps(plain(ns.spec_to_dict(spec)), indent=2, sort_keys=True) + "\n").encode())
                return 0
            if args.N < 1:
                raise ScenarioError("--N must be positive")
            vecs = [ns.eval_nilchar(spec, n) for n in range(1, args.N + 1)]
            write(gw.SampledFunction.from_vectors(vecs).to_csv().encode())
            return 0
        if args.command == "scenario" and args.action == "list":
            write(("\n".join(bundled_scenarios()) + "\n").encode())
            return 0
        if args.command == "schema" and args.action in ("show", "dump"):
            s = _load_schema(args.ref)
            text = ng.pretty_schema(s) if args.action == "show" else ng.dumps_schema(s)
            write((text.rstrip("\n") + "\n").encode())
            return 0
        if args.command == "schema" and args.action == "verify" and Path(args.ref).exists():
            s = _load_schema(args.ref)
            rep = ng.verify_schema(s, args.samples)
            r = ScenarioReport("schema-verify", "schema-verify", 0, {"schema": ng.schema_to_dict(s)})
            r.check(f"schema {s.name}", rep.ok, rep.data if rep.ok else rep.failure, None, rep.witness)
            write(emit_report(r, args.format))
            return r.exit_status
        doc = _scenario_for(args)
        r = run_scenario(doc)
    except (ScenarioError, br.BracketSyntaxError, ng.SchemaError, ValueError, OSError) as exc:
        sys.stderr.write(f"nilcalc: error: {exc}\n")
        return 2
    write(emit_report(r, args.format))
    return r.exit_status


if __name__ == "__main__":
    sys.exit(main())
