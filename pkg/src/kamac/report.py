"""Assembly of JSON-ready report sections for a scenario.

Every number is wrapped as ``{"value": v, "provenance": tag}`` with tag in
``oracle`` (computed from the model), ``closed-form`` (a formula evaluated
directly) or ``paper-reported`` (a printed value carried for comparison).
Values computed along the way are also collected in a flat ``oracles``
table; annotation entries point into that table by key.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .errors import DomainError, SizeCapError
from .graphs import (
    build_conditional_char_graph,
    chromatic_number,
)
from .ka import evaluate_direct, gradient, hessian, inner_image_distribution, pipeline_evaluate, taylor2
from .prob import (
    JointPmf,
    Pmf,
    binary_entropy,
    branch_determined,
    conditional_entropy,
    coupling_mixture_entropy,
    entropy,
    entropy_of,
    joint_entropy,
    maximal_coupling,
    pushforward,
)
from .rates import (
    Annotation,
    chromatic_rate_estimate,
    compare,
    graph_entropy,
    graph_region,
    inner_region,
    sw_region,
)

SCHEMA = "ka-mac/1"
SPOT_CHECKS = 32
FD_STEP = 1e-5


def jsonable(v):
    """Plain JSON value for a symbol or number."""
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v) or math.isinf(v):
            return str(v)
        return v
    if isinstance(v, (tuple, list, np.ndarray)):
        return [jsonable(u) for u in v]
    return v


def tag(v, provenance="oracle"):
    return {"value": jsonable(v), "provenance": provenance}


def subset_label(s) -> str:
    return ",".join(str(i + 1) for i in s)


class ReportBuilder:
    """Computes report sections lazily and records oracle values by key."""

    def __init__(self, scenario):
        self.sc = scenario
        self.oracles: dict = {}
        self._rates = None

    def _note(self, key, value):
        self.oracles[key] = float(value)
        return value

    # ---------------------------------------------------------------- entropies

    def entropies(self) -> dict:
        sc, j = self.sc, self.sc.joint
        out = {}
        for p in range(j.n):
            out[f"H(X{p + 1})"] = tag(self._note(f"entropy:H(X{p + 1})", entropy(j.marginal_pmf(p))))
        out["H(X)"] = tag(self._note("entropy:H(X)", joint_entropy(j)))
        f = lambda x: evaluate_direct(sc.function, sc.params, x)  # noqa: E731
        out["H(f)"] = tag(self._note("entropy:H(f)", entropy(pushforward(j, f))))
        if all(isinstance(s, (int, Fraction)) for a in j.alphabets for s in a.symbols):
            h_sum = entropy(pushforward(j, lambda x: sum(x)))
            out["H(X_sum)"] = tag(self._note("entropy:H(X_sum)", h_sum))
        if sc.system is not None and sc.system.scalar:
            jy = inner_image_distribution(sc.system, j)
            for p in range(j.n):
                key = f"H(Y{p + 1})"
                out[key] = tag(self._note("entropy:" + key, entropy(jy.marginal_pmf(p))))
                cf = self._closed_form_inner(p)
                if cf is not None:
                    out[key + "_closed_form"] = tag(cf, "closed-form")
        return out

    def _closed_form_inner(self, p):
        # uniform on {-M..M} through an even inner map: mass 1/(2M+1) at 0, 2/(2M+1) elsewhere
        sc = self.sc
        if sc.function not in ("product_abs_sprecher", "product_abs_simple", "lm_norm"):
            return None
        pmf = sc.joint.marginal_pmf(p)
        syms = pmf.symbols
        m = len(syms) // 2
        if syms != tuple(range(-m, m + 1)) or len(set(pmf.probs)) != 1 or m < 1:
            return None
        return math.log2(2 * m + 1) - 2 * m / (2 * m + 1)

    # -------------------------------------------------------------------- rates

    def rate_tables(self):
        if self._rates is None:
            sc, j = self.sc, self.sc.joint
            regions = [sw_region(j)]
            if sc.system is not None and sc.system.scalar:
                regions.append(inner_region(sc.system, j))
            f = lambda x: evaluate_direct(sc.function, sc.params, x)  # noqa: E731
            lower, ach, graphs, colorings = graph_region(f, j, system=sc.system)
            regions += [lower, ach]
            self._rates = (compare(*regions), graphs, colorings)
        return self._rates

    def rates(self) -> dict:
        report, graphs, colorings = self.rate_tables()
        rows = []
        for s in report.subsets:
            row = {"subset": [i + 1 for i in s]}
            for scheme, v in report.rows[s].items():
                self._note(f"rates:{scheme}:{subset_label(s)}", v)
                entry = tag(v)
                note = report.notes[s].get(scheme)
                if note:
                    entry["note"] = note
                row[scheme] = entry
            row["flags"] = dict(report.flags[s])
            rows.append(row)
        jm = self._graph_model()
        sources = []
        for p, (g, col) in enumerate(zip(graphs, colorings)):
            pm = jm.marginal_pmf(p)
            entry = {
                "source": p + 1,
                "vertices": jsonable(list(g.vertices)),
                "edges": jsonable([list(e) for e in g.edge_symbols]),
                "chromatic_number": tag(chromatic_number(g)),
                "graph_entropy": tag(self._note(f"graph:{p + 1}:graph_entropy",
                                                graph_entropy(g, pm).value)),
                "coloring": jsonable(list(col.assignment)),
                "coloring_entropy": tag(self._note(
                    f"graph:{p + 1}:coloring_entropy",
                    entropy_of(sum((pm.prob(v) for v in cls), start=0) for cls in col.classes),
                )),
            }
            k_max = self.sc.options["k_max"]
            if k_max > 1:
                try:
                    est = chromatic_rate_estimate(g, pm, k_max)
                    entry["chromatic_rate_estimate"] = [tag(v) for v in est]
                except SizeCapError as exc:
                    entry["chromatic_rate_estimate"] = str(exc)
            sources.append(entry)
        return {"rows": rows, "graphs": sources, "consistent": report.consistent}

    def _graph_model(self) -> JointPmf:
        sc = self.sc
        if sc.system is None:
            return sc.joint
        return inner_image_distribution(sc.system, sc.joint)

    # -------------------------------------------------------------- conditional

    def conditional(self) -> list:
        """Per-value conditional graph entropies under both edge rules (two sources)."""
        sc, j = self.sc, self.sc.joint
        if j.n != 2:
            return []
        f = lambda x: evaluate_direct(sc.function, sc.params, x)  # noqa: E731
        out = []
        for p in range(2):
            r = 1 - p
            given = j.marginal_pmf(r)
            for rule in ("pointwise", "global"):
                per_value, avg = [], []
                for v, pv in given.items():
                    if pv == 0:
                        continue
                    g = build_conditional_char_graph(j, f, p, {r: v}, rule=rule)
                    cond = {x[p]: pr for x, pr in j.support() if x[r] == v}
                    pmf = Pmf.from_dict({s: Fraction(cond[s]) / Fraction(pv) if j.exact
                                         else float(cond[s]) / float(pv) for s in g.vertices})
                    h = graph_entropy(g, pmf).value
                    key = f"conditional:{rule}:{p + 1}|{r + 1}={v}"
                    per_value.append({"given": jsonable(v), "probability": tag(pv),
                                      "graph_entropy": tag(self._note(key, h))})
                    avg.append(float(pv) * h)
                total = math.fsum(avg)
                out.append({
                    "source": p + 1,
                    "given_source": r + 1,
                    "rule": rule,
                    "per_value": per_value,
                    "average": tag(self._note(f"conditional:{rule}:{p + 1}|{r + 1}", total)),
                })
        return out

    # ----------------------------------------------------------------- coupling

    def coupling(self) -> dict:
        sc = self.sc
        if sc.coupling is not None:
            p, q = sc.coupling
        elif sc.joint.n == 2 and sc.joint.alphabets[0] == sc.joint.alphabets[1]:
            p, q = sc.joint.marginal_pmf(0), sc.joint.marginal_pmf(1)
        else:
            raise DomainError("coupling needs two sources over a common alphabet")
        c = maximal_coupling(p, q)
        syms = p.symbols
        out = {
            "symbols": jsonable(list(syms)),
            "delta": tag(self._note("coupling:delta", c.delta)),
            "pT": [tag(v) for v in c.pT.probs] if c.pT is not None else None,
            "pV": [tag(v) for v in c.pV.probs] if c.pV is not None else None,
            "pW": [tag(v) for v in c.pW.probs] if c.pW is not None else None,
            "table": [[tag(c.joint.prob((a, b))) for b in syms] for a in syms],
            "branch_determined": branch_determined(c),
            "joint_entropy": tag(self._note("coupling:joint_entropy", joint_entropy(c.joint))),
            "independent_joint_entropy": tag(self._note(
                "coupling:independent_joint_entropy", entropy(p) + entropy(q))),
            "conditional_entropy_2_given_1": tag(conditional_entropy(c.joint, (1,), (0,))),
        }
        if c.pT is not None:
            out["H(T)"] = tag(self._note("coupling:H(T)", entropy(c.pT)))
        if 0 < c.delta < 1:
            out["h(delta)"] = tag(binary_entropy(c.delta), "closed-form")
            out["mixture_entropy"] = tag(
                self._note("coupling:mixture_entropy", coupling_mixture_entropy(c)), "closed-form")
        return out

    # ----------------------------------------------------------------- pipeline

    def pipeline(self) -> dict:
        sc = self.sc
        if sc.system is None:
            return {"skipped": f"{sc.function} has no decomposition"}
        points = [x for x, _ in sc.joint.support()][:SPOT_CHECKS]
        worst = 0.0
        checks = []
        for x in points:
            out = pipeline_evaluate(sc.system, x).output
            direct = float(evaluate_direct(sc.function, sc.params, x))
            err = abs(out - direct) / max(1.0, abs(direct))
            worst = max(worst, err)
            checks.append({"x": jsonable(x), "pipeline": tag(out), "direct": tag(direct, "closed-form")})
        return {"checks": checks, "max_relative_error": tag(worst)}

    # ----------------------------------------------------------------- calculus

    def calculus(self, at=None, dx=None) -> dict:
        sc = self.sc
        if sc.system is None:
            raise DomainError(f"{sc.function} has no decomposition to differentiate")
        at = at if at is not None else sc.options.get("calculus_at")
        if at is None:
            return {"skipped": "no calculus_at point"}
        x = np.array([float(v) for v in at])
        dx = np.array([float(v) for v in (dx if dx is not None else
                                           sc.options.get("calculus_dx", [0.1] * sc.n))])
        s = sc.system
        g = gradient(s, x)
        h = hessian(s, x)
        f = lambda z: float(evaluate_direct(sc.function, sc.params, tuple(z)))  # noqa: E731
        eye = np.eye(s.n)
        fd_g = np.array([(f(x + FD_STEP * e) - f(x - FD_STEP * e)) / (2 * FD_STEP) for e in eye])
        step = 1e-4
        fd_h = np.array([[(f(x + step * a + step * b) - f(x + step * a - step * b)
                           - f(x - step * a + step * b) + f(x - step * a - step * b)) / (4 * step ** 2)
                          for b in eye] for a in eye])
        pred = taylor2(s, x, dx)
        actual = f(x + dx)
        return {
            "at": jsonable(x),
            "dx": jsonable(dx),
            "gradient": [tag(v) for v in g],
            "gradient_fd": [tag(v) for v in fd_g],
            "hessian": [[tag(v) for v in row] for row in h],
            "hessian_fd": [[tag(v) for v in row] for row in fd_h],
            "taylor2": tag(pred),
            "direct": tag(actual, "closed-form"),
            "taylor2_remainder": tag(actual - pred),
        }

    # -------------------------------------------------------------- annotations

    def annotations(self) -> list:
        out = []
        for a in self.sc.annotations:
            ann = Annotation(a["quantity"], a["location"], float(a["paper_value"]),
                             self.oracles.get(a["oracle"]), float(a.get("tol", 5e-3)))
            out.append({
                "quantity": ann.quantity,
                "location": ann.location,
                "oracle_key": a["oracle"],
                "paper_value": tag(ann.paper_value, "paper-reported"),
                "oracle_value": tag(ann.oracle_value) if ann.oracle_value is not None else None,
                "agree": ann.agree,
            })
        return out

    # ------------------------------------------------------------------- report

    def full(self) -> dict:
        sc = self.sc
        rep = {
            "schema": SCHEMA,
            "scenario": sc.raw,
            "entropies": self.entropies(),
            "rate_report": self.rates(),
            "pipeline": self.pipeline(),
            "calculus": self.calculus() if sc.system is not None else {"skipped": "no decomposition"},
        }
        if sc.coupling is not None:
            rep["coupling"] = self.coupling()
        if sc.options.get("conditional_breakdown"):
            rep["conditional_breakdown"] = self.conditional()
        rep["paper_annotations"] = self.annotations()
        return rep


def build_report(scenario) -> dict:
    return ReportBuilder(scenario).full()
