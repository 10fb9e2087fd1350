"""Comparison table of published values against exact, simulated and limit results."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

from .exact import connected_count
from .limits import purdom_williams_kappa

# published values and the tolerances they are checked at
PUBLISHED = {
    "I": 0.6884050874956,
    "var": 0.2839,
    "mean_mu": 0.7578230112,
    "mean_lambda": math.sqrt(math.pi / 2.0),
    "ratio_cond": 0.5493,
    "ratio_conl": 0.6243,
    "richest": 0.075,
}
LIMIT_TOL = {"I": 1e-9, "var": 5e-5, "mean_mu": 1e-5, "ratio_cond": 1e-4,
             "ratio_conl": 1e-4, "richest": 1e-3}
SIM_TOL = {"I": 0.02, "var": 0.02, "mean_mu": 0.01, "mean_lambda": 0.01,
           "ratio_cond": 0.01, "ratio_conl": 0.01, "richest": 0.01}
KS_TOL = 0.01
KAPPA_REL_TOL = 0.01
KAPPA_EXACT_TOL = 0.15

COLUMNS = ("quantity", "published", "exact", "simulated", "stderr", "limit", "status")


@dataclass
class Row:
    quantity: str
    published: float | None = None
    exact: str | None = None
    simulated: float | None = None
    stderr: float | None = None
    limit: float | None = None
    ok: bool = True

    @property
    def status(self) -> str:
        return "PASS" if self.ok else "FAIL"

    def cells(self) -> list[str]:
        def fmt(v):
            if v is None:
                return ""
            return v if isinstance(v, str) else f"{v:.10g}"
        return [self.quantity, fmt(self.published), fmt(self.exact), fmt(self.simulated),
                fmt(self.stderr), fmt(self.limit), self.status]


def _row(name, key, sim=None, limit=None, published=None):
    published = PUBLISHED[key] if published is None else published
    row = Row(name, published=published)
    if limit is not None:
        row.limit = limit
        row.ok &= abs(limit - published) <= LIMIT_TOL[key]
    if sim is not None:
        row.simulated, row.stderr = sim["value"], sim["stderr"]
        row.ok &= abs(sim["value"] - published) <= SIM_TOL[key]
    return row


def build_rows(sim: dict | None = None, exact: list[dict] | None = None,
               constants: dict | None = None) -> list[Row]:
    """``sim`` is a SimReport JSON dict, ``exact`` ExactTable JSON dicts and
    ``constants`` the limit-constant JSON; any of them may be missing."""
    c = constants or {}
    rows: list[Row] = []
    specs = [
        ("E(nu)/sqrt(n)", "I", "mean_nu_over_sqrt_n", "I"),
        ("Var(nu)/n", "var", "var_nu_over_n", "var_limit"),
        ("E(mu)/n", "mean_mu", "mean_mu_over_n", "mean_mu"),
        ("E(lambda)/sqrt(n)", "mean_lambda", "mean_lambda_over_sqrt_n", None),
        ("E(nu)/E(lambda)", "ratio_cond", "ratio_nu_lambda", "ratio_cond"),
        ("E(kappa)/E(lambda)", "ratio_conl", "ratio_kappa_lambda", "ratio_conl"),
        ("(E(kappa)-E(nu))/E(lambda)", "richest", "ratio_difference", "richest_diff"),
        ("P(richest != largest)", "richest", "p_richest_not_largest", "richest_diff"),
    ]
    for name, key, sim_key, lim_key in specs:
        limit = c.get(lim_key) if lim_key else None
        s = sim.get(sim_key) if sim else None
        if limit is None and s is None:
            continue
        rows.append(_row(name, key, sim=s, limit=limit))
    if sim:
        n = sim["n"]
        pw = purdom_williams_kappa(n)
        k = sim["mean_kappa"]
        lo = pw * (1 - KAPPA_REL_TOL) - 2 * k["stderr"]
        hi = pw * (1 + KAPPA_REL_TOL) + 2 * k["stderr"]
        rows.append(Row(f"E(kappa_n) n={n}", published=pw, simulated=k["value"],
                        stderr=k["stderr"], ok=lo <= k["value"] <= hi))
        if sim.get("ks_distance") is not None:
            rows.append(Row("KS(nu/sqrt(n), limit)", published=None, simulated=sim["ks_distance"],
                            ok=sim["ks_distance"] < KS_TOL))
    for e in exact or []:
        n = e["n"]
        e_nu2, e_mu = Fraction(e["E_nu2"]), Fraction(e["E_mu"])
        rows.append(Row(f"E(nu^2) - E(mu) n={n}", exact=str(e_nu2 - e_mu), ok=e_nu2 == e_mu))
        katz = connected_count(n)
        rows.append(Row(f"connected count n={n}", published=float(katz), exact=e["connected_count"],
                        ok=int(e["connected_count"]) == katz))
        if "E_kappa" in e:
            ek = Fraction(e["E_kappa"])
            pw = purdom_williams_kappa(n)
            rows.append(Row(f"E(kappa_n) n={n}", published=pw, exact=f"{float(ek):.10g}",
                            ok=abs(float(ek) - pw) <= KAPPA_EXACT_TOL))
    return rows


def format_table(rows: list[Row]) -> str:
    cells = [list(COLUMNS)] + [r.cells() for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(COLUMNS))]
    lines = ["  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def to_csv(rows: list[Row]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()
