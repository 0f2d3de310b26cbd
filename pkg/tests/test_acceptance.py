"""Acceptance suite: one test per numbered criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` (or ``-rA``) to see the lines.
"""

import csv
import math
import time

import numpy as np
import pytest

from chi2tail import adversarial as adv
from chi2tail import audits as au
from chi2tail import cli
from chi2tail import montecarlo as mc
from chi2tail.estimators import LAPLACE, ConfidenceDependent
from chi2tail.simplex import RngSeed


@pytest.fixture
def report(capsys):
    def _report(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")
        assert ok, detail
    return _report


def run_recipe(name, out, workers=None):
    args = ["--config", f"recipe:{name}", "--out", str(out)]
    if workers is not None:
        args += ["--workers", str(workers)]
    cmd = cli.load_config(f"recipe:{name}")["command"]
    code = cli.main([cmd, *args])
    return code


def rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


def test_criterion_01_reciprocal_moment(report):
    r, secs = timed(au.audit_reciprocal_moment, 200)
    ok = r.trials == 200 * 99 and r.violations == 0 and secs < 5
    report(1, ok, f"{r.trials} points, {r.violations} above 1e-10, {secs:.2f}s")


def test_criterion_02_laplace_enumeration(report):
    r, secs = timed(au.audit_laplace_enumeration, RngSeed(2))
    ok = r.violations == 0 and secs < 30
    report(2, ok, f"{r.trials} enumerated cases incl. 1/8 at uniform_2 n=1, "
                  f"{r.violations} above rel 1e-10, {secs:.2f}s")


def test_criterion_03_laplace_bound(report):
    r = au.audit_laplace_bound(1000, RngSeed(3))
    report(3, r.trials == 1000 and r.violations == 0,
           f"{r.trials} grid points, {r.violations} violations")


def test_criterion_04a_sandwich(report):
    r, secs = timed(au.audit_sandwich, 10**6, RngSeed(4))
    report("4a", r.violations == 0 and secs < 10,
           f"sandwich over {r.trials} pairs, {r.violations} violations, {secs:.2f}s")


def test_criterion_04b_residual_split(report):
    """The split with the (7/8)^2 coefficient is false; this test fails by design.

    The same audit with coefficient 1 has no violations (see test_audits).
    """
    r, secs = timed(au.audit_residual_split, 10**6, RngSeed(4))
    detail = (f"kl/hellinger/residual split over {r.trials} pairs, {r.violations} violations, "
              f"worst slack {r.worst_slack:.3g}, {secs:.2f}s")
    if r.table:
        p, q, lhs, rhs = r.table[0]
        detail += f"; e.g. p={p:.3g} q={q:.3g} lhs={lhs:.4g} > rhs={rhs:.4g}"
    report("4b", r.violations == 0 and secs < 10, detail)


def _tail_rows(recipe, tmp_path):
    t0 = time.perf_counter()
    code = run_recipe(recipe, tmp_path)
    secs = time.perf_counter() - t0
    return code, rows(tmp_path / f"{recipe}.csv"), secs


def test_criterion_05_thm1_tail(report, tmp_path):
    code, rs, secs = _tail_rows("thm1_tail", tmp_path)
    bad = [r for r in rs if r["holds"] != "true"]
    exceed = sum(int(r["exceed_count[count]"]) for r in rs)
    ok = len(rs) == 9 and not bad and code == 0 and secs < 300
    ok = ok and all(r["replications[count]"] == "100000" for r in rs)
    report(5, ok, f"{len(rs)} points x 1e5 reps, {len(bad)} above 4 delta, "
                  f"total exceedances {exceed}, {secs:.1f}s")


def test_criterion_06_thm3_tail(report, tmp_path):
    code, rs, secs = _tail_rows("thm3_tail", tmp_path)
    bad = [r for r in rs if r["holds"] != "true"]
    large = [r for r in rs if float(r["log_inv_delta"]) > math.sqrt(int(r["d[count]"]))]
    ok = not bad and code == 0 and secs < 300 and any(
        r["d[count]"] == "4" and float(r["log_inv_delta"]) == 5.0 for r in large)
    report(6, ok, f"{len(rs)} points ({len(large)} with log(1/delta) > sqrt d), "
                  f"{len(bad)} above 4 delta, {secs:.1f}s")


def test_criterion_07_remark(report):
    r = au.audit_remark(10**5, RngSeed(8))
    report(7, r.trials == 10**5 and r.violations == 0,
           f"{r.trials} trials, {r.violations} above 2n+1, min slack {r.worst_slack:.3g}")


def test_criterion_08_residual_tails(report, tmp_path):
    code, rs, secs = _tail_rows("lemma6_residual", tmp_path)
    wanted = {(1000, 10, 0.01), (2000, 4, math.exp(-3))}
    seen = set()
    bad = []
    for r in rs:
        key = (int(r["n[count]"]), int(r["d[count]"]), float(r["delta[prob]"]))
        if any(key[:2] == w[:2] and math.isclose(key[2], w[2]) for w in wanted):
            seen.add((key[0], r["statistic"]))
        if r["holds"] != "true":
            bad.append(r)
    ok = code == 0 and not bad and len(seen) == 4
    report(8, ok, f"{len(rs)} points (both variants at both required settings), "
                  f"{len(bad)} above 2 delta, {secs:.1f}s")


def test_criterion_09_certificates(report):
    t0 = time.perf_counter()
    delta = math.exp(-8)
    c2 = adv.lemma2_certificate(LAPLACE, 1000, 10, delta, 1.0)
    ok2 = (math.isclose(c2.event_prob, delta, rel_tol=1e-12)
           and math.isclose(c2.witness_term, 0.0492, rel_tol=5e-3)
           and c2.loss_on_event >= c2.witness_term
           and math.isclose(c2.threshold, 0.00256, rel_tol=1e-12) and c2.holds)
    checked, failed = 0, []
    for n in (100, 1000, 10_000):
        for d in (4, 16, 64):
            for L in (2, 8, 32):
                dl = math.exp(-L)
                if not adv.family_in_domain(n, d, dl):
                    continue
                for est in (LAPLACE, ConfidenceDependent(dl)):
                    c1 = adv.lemma1_certificate(est, n, d, dl)
                    checked += 1
                    if not c1.holds:
                        failed.append((n, d, L, str(est)))
    secs = time.perf_counter() - t0
    ok = ok2 and checked > 0 and not failed and secs < 1
    report(9, ok, f"lemma2 event_prob={c2.event_prob:.6g} witness={c2.witness_term:.4g} "
                  f"full={c2.loss_on_event:.4g} thr={c2.threshold:.4g}; lemma1 {checked} "
                  f"certificates, {len(failed)} failing, {secs:.3f}s")


def test_criterion_10_decompositions(report, tmp_path):
    assert run_recipe("decompositions", tmp_path) == 0
    rs = {r["audit"]: r for r in rows(tmp_path / "decompositions.csv")}
    asserting = ("lemma3_laplace", "lemma3_confidence", "lemma5")
    ok = all(rs[a]["trials[count]"] == "100000" and rs[a]["violations[count]"] == "0"
             for a in asserting)
    ok = ok and rs["lemma5_exploratory"]["asserting"] == "false"
    ok = ok and (tmp_path / "decompositions_lemma5_exploratory_table.csv").exists()
    report(10, ok, "; ".join(f"{a}: {rs[a]['violations[count]']}/{rs[a]['trials[count]']}"
                             for a in rs))


def test_criterion_11_domination(report):
    r = au.audit_domination()
    report(11, r.trials >= 3 * 50 * 100 and r.violations == 0,
           f"{r.trials} grid points, {r.violations} violations")


def test_criterion_12_envelope_moments(report):
    closed = au.audit_moment_closed_form()
    mcr, secs = timed(au.audit_envelope_moments, 10**6, RngSeed(12))
    ok = closed.violations == 0 and closed.trials == 8 and mcr.violations == 0
    report(12, ok, f"closed form p=1..8: {closed.violations} above 2270 p^2; Monte Carlo "
                   f"{len(au.MOMENT_CASES)} (d, p) cases x 1e6 reps: {mcr.violations} above bound, "
                   f"min rel slack {mcr.worst_slack:.3g}, {secs:.1f}s")


@pytest.mark.parametrize("recipe", ["determinism", "decompositions"])
def test_criterion_13_determinism(report, tmp_path, recipe):
    outputs = []
    for w in (1, 4, 16):
        out = tmp_path / f"w{w}"
        run_recipe(recipe, out, workers=w)
        outputs.append(sorted((p.name, p.read_bytes()) for p in out.iterdir()
                              if p.suffix in (".csv", ".svg")))
    ok = outputs[0] == outputs[1] == outputs[2] and len(outputs[0]) > 0
    report(13, ok, f"{recipe}: {len(outputs[0])} files byte-identical across workers 1, 4, 16")


def test_criterion_14_poissonization(report):
    r = au.audit_poissonization(10**5, RngSeed(14))
    n, point, lo, hi, floor = r.table[0]
    coupling = r.violations - (0 if hi >= floor else 1)
    report(14, r.violations == 0, f"P(N<=60) ~ {point:.5f} (ci_high {hi:.5f}) vs "
                                  f"1-e^-10 = {floor:.5f}; coupling breaks {coupling}")
