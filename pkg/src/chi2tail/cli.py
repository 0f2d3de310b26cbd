"""Command-line experiment runner.

Subcommands ``tail-risk``, ``expectation``, ``lower-bound``, ``audit`` and
``thresholds`` read a flat JSON config, run the matching library routine and
write CSV (plus SVG for the Monte Carlo commands) into ``--out``.

Exit status: 0 when every asserted check passed, 1 when one failed, 2 on a
config or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import audits as au
from . import montecarlo as mc
from .adversarial import (
    DomainError,
    build_family,
    family_in_domain,
    lemma1_certificate,
    lemma2_certificate,
    lemma2_in_domain,
)
from .bounds import Family, ThresholdSpec, compare_thresholds, threshold
from .divergences import PreconditionError
from .estimators import LAPLACE, ConfidenceDependent, Empirical, parse_rule, resolve_lambda
from .exact import exact_laplace_chi2_expectation
from .simplex import (
    Distribution,
    RngSeed,
    ValidationError,
    dirac,
    make_distribution,
    power_law,
    two_point,
    uniform,
)
from .svgplot import Plot

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2
_U64 = 1 << 64


class ConfigError(Exception):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


# -- config plumbing --------------------------------------------------------


def load_config(path: str | None) -> dict:
    """Parse a JSON config file or a ``recipe:NAME`` reference; ``None`` gives ``{}``."""
    if path is None:
        return {}
    if path.startswith("recipe:"):
        name = path[len("recipe:"):]
        res = resources.files("chi2tail") / "recipes" / f"{name}.json"
        if not res.is_file():
            raise ConfigError("", f"no bundled recipe named {name!r}; available: "
                              f"{', '.join(list_recipes())}")
        text, origin = res.read_text(encoding="utf-8"), name
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("", f"cannot read config {path!r}: {exc.strerror}") from exc
        origin = Path(path).stem
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("", "config must be a JSON object")
    cfg.setdefault("experiment", origin)
    return cfg


def list_recipes() -> list[str]:
    folder = resources.files("chi2tail") / "recipes"
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


def _check_keys(cfg: dict, allowed: set[str]) -> None:
    extra = sorted(set(cfg) - allowed - {"command", "experiment", "description", "seed"})
    if extra:
        raise ConfigError(extra[0], f"unknown field; allowed fields are {sorted(allowed)}")


def _as_list(value):
    return value if isinstance(value, list) else [value]


def _int(cfg, key, default=None, minimum=None):
    v = cfg.get(key, default)
    if v is None:
        raise ConfigError(key, "required field is missing")
    if isinstance(v, bool) or not isinstance(v, (int, float)) or v != int(v):
        raise ConfigError(key, f"expected an integer, got {v!r}")
    v = int(v)
    if minimum is not None and v < minimum:
        raise ConfigError(key, f"must be at least {minimum}, got {v}")
    return v


def _int_grid(cfg, key, minimum=1):
    if key not in cfg:
        raise ConfigError(key, "required field is missing")
    vals = _as_list(cfg[key])
    if not vals:
        raise ConfigError(key, "grid is empty")
    return [_int({key: v}, key, minimum=minimum) for v in vals]


def _float(cfg, key, default=None):
    v = cfg.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(key, f"expected a number, got {v!r}")
    return float(v)


def delta_grid(cfg) -> list[float]:
    """Confidence levels from ``delta`` or ``log_inv_delta`` (values of ``log(1/delta)``)."""
    if ("delta" in cfg) == ("log_inv_delta" in cfg):
        raise ConfigError("delta", "give exactly one of 'delta' or 'log_inv_delta'")
    key = "delta" if "delta" in cfg else "log_inv_delta"
    vals = _as_list(cfg[key])
    if not vals:
        raise ConfigError(key, "grid is empty")
    out = []
    for v in vals:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(key, f"expected numbers, got {v!r}")
        delta = float(v) if key == "delta" else math.exp(-float(v))
        if not 0.0 < delta < 1.0:
            raise ConfigError(key, f"delta must lie in (0, 1), got {delta!r}")
        out.append(delta)
    return out


def _seed(cfg, override) -> int:
    v = override if override is not None else cfg.get("seed", 0)
    if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v < _U64:
        raise ConfigError("seed", f"expected an unsigned 64-bit integer, got {v!r}")
    return v


def _rule(token, delta, field="rule"):
    try:
        return parse_rule(token, delta)
    except ValidationError as exc:
        raise ConfigError(field, str(exc)) from exc


def _dist_specs(cfg) -> list:
    if "distributions" in cfg:
        specs = cfg["distributions"]
        if not isinstance(specs, list) or not specs:
            raise ConfigError("distributions", "expected a nonempty list")
        return specs
    return [cfg.get("distribution", "uniform")]


def dist_label(spec) -> str:
    if isinstance(spec, str):
        return spec
    if not isinstance(spec, dict):
        return str(spec)
    if "label" in spec:
        return str(spec["label"])
    kind = spec.get("kind")
    if kind == "two-point":
        return f"two-point({spec.get('rho')})"
    if kind == "power-law":
        return f"power-law({spec.get('exponent')})"
    if kind == "dirac":
        return f"dirac({spec.get('j', 0)})"
    if kind == "adversarial":
        return f"adversarial({spec.get('lemma', 'lemma2')})"
    return str(kind)


def build_distribution(spec, n: int, d: int, delta: float | None = None,
                       rule=LAPLACE, field: str = "distribution") -> Distribution:
    """Materialize a distribution spec at one grid point."""
    if isinstance(spec, str):
        spec = {"kind": spec}
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(field, f"expected a string or an object with 'kind', got {spec!r}")
    kind = spec["kind"]
    try:
        if kind == "uniform":
            return uniform(d)
        if kind == "dirac":
            return dirac(int(spec.get("j", 0)), d)
        if kind == "two-point":
            return two_point(d, float(spec["rho"]), int(spec.get("j", 1)))
        if kind == "power-law":
            return power_law(d, float(spec["exponent"]))
        if kind == "explicit":
            P = make_distribution(spec["probs"])
            if P.d != d:
                raise ConfigError(field, f"explicit vector has {P.d} entries but d={d}")
            return P
        if kind == "adversarial":
            if delta is None:
                raise ConfigError(field, "adversarial distributions need a delta")
            lemma = spec.get("lemma", "lemma2")
            if lemma == "lemma2":
                j = lemma2_certificate(rule, n, d, delta, strict=False).witness_j
            elif lemma == "lemma1":
                j = lemma1_certificate(rule, n, d, delta, strict=False).witness_j
            else:
                raise ConfigError(field, f"adversarial lemma must be lemma1 or lemma2, got {lemma!r}")
            return build_family(n, d, delta, strict=False).members[j]
    except KeyError as exc:
        raise ConfigError(field, f"{kind} distribution needs field {exc.args[0]!r}") from exc
    except (ValidationError, DomainError) as exc:
        raise ConfigError(field, str(exc)) from exc
    raise ConfigError(field, f"unknown kind {kind!r}; expected uniform, dirac, two-point, "
                             "power-law, explicit or adversarial")


# -- output -----------------------------------------------------------------


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            raise ValueError("NaN in result record")
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    path.write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def _outdir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError as exc:
        raise ConfigError("--out", f"cannot write to {path!r}: {exc.strerror}") from exc
    return out


def _write_timing(out: Path, exp: str, times_ms: list[float]) -> None:
    data = {"experiment": exp, "rows_ms": [round(t, 3) for t in times_ms],
            "total_ms": round(sum(times_ms), 3)}
    (out / f"{exp}.timing.json").write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


# -- tail-risk --------------------------------------------------------------

TAIL_KEYS = {"rule", "family", "statistic", "n", "d", "delta", "log_inv_delta",
             "distribution", "distributions", "replications", "multiplier"}
TAIL_HEADER = ["experiment", "distribution", "rule", "statistic", "n[count]", "d[count]",
               "delta[prob]", "log_inv_delta", "lambda", "family", "threshold[loss]",
               "multiplier", "bound[prob]", "exceed_count[count]", "replications[count]",
               "point[prob]", "ci_low[prob]", "ci_high[prob]", "infinite_count[count]",
               "quantile[loss]", "in_domain", "holds", "seed", "stream_id"]
PLOT_FAMILIES = (Family.ASYMPTOTIC_BENCHMARK, Family.MARKOV_BASELINE, Family.PRIOR_ART,
                 Family.THM1_UPPER_LAPLACE, Family.THM3_UPPER_CONF_DEP)


def cmd_tail_risk(cfg: dict, out: Path, seed: int, workers: int, timing: bool = False) -> int:
    _check_keys(cfg, TAIL_KEYS)
    exp = str(cfg["experiment"])
    stats_ = _as_list(cfg.get("statistic", "chi2"))
    for st in stats_:
        if st not in ("chi2", "residual_laplace", "residual_confidence"):
            raise ConfigError("statistic", f"unknown statistic {st!r}; expected chi2, "
                              "residual_laplace or residual_confidence")
    rule_token = cfg.get("rule", "laplace")
    ns = _int_grid(cfg, "n")
    ds = _int_grid(cfg, "d", minimum=2)
    deltas = delta_grid(cfg)
    reps = _int(cfg, "replications", 100_000, minimum=1)
    specs = _dist_specs(cfg)
    if "chi2" in stats_:
        _rule(rule_token, deltas[0])
    fam_override = None
    if "family" in cfg:
        try:
            fam_override = Family.parse(str(cfg["family"]))
        except ValidationError as exc:
            raise ConfigError("family", str(exc)) from exc

    rows, times, curves = [], [], {}
    stream = 0
    for statistic in stats_:
        for si, spec in enumerate(specs):
            label = dist_label(spec)
            for n in ns:
                for d in ds:
                    for delta in deltas:
                        t0 = time.perf_counter()
                        row = _tail_point(cfg, exp, statistic, rule_token, fam_override, spec,
                                          si, label, n, d, delta, reps, seed, stream, workers)
                        rows.append(row)
                        times.append(1000.0 * (time.perf_counter() - t0))
                        if statistic == "chi2":
                            curves.setdefault((label, n, d), []).append((row[7], row[19]))
                        stream += 1

    header = list(TAIL_HEADER)
    if timing:
        header.append("wall_time_ms")
        for r, t in zip(rows, times):
            r.append(round(t, 3))
    write_csv(out / f"{exp}.csv", header, rows)
    _write_timing(out, exp, times)
    if curves:
        _tail_plot(out / f"{exp}.svg", exp, curves, min(ns), min(ds), deltas)
    failed = [r for r in rows if r[20] and not r[21]]
    for r in rows:
        print(f"{exp} {r[1]} n={r[4]} delta={r[6]:.4g}: exceed={r[13]}/{r[14]} "
              f"bound={r[12]:.4g} {'PASS' if r[21] else 'FAIL'}"
              f"{'' if r[20] else ' (out of domain)'}")
    return EXIT_VIOLATION if failed else EXIT_OK


def _tail_point(cfg, exp, statistic, rule_token, fam_override, spec, si, label,
                n, d, delta, reps, seed, stream, workers) -> list:
    L = math.log(1.0 / delta)
    rs = RngSeed(seed, stream)
    field = f"distributions[{si}]"
    if statistic == "chi2":
        rule = _rule(rule_token, delta)
        fam = fam_override or (Family.THM3_UPPER_CONF_DEP if isinstance(rule, ConfidenceDependent)
                               else Family.THM1_UPPER_LAPLACE)
        tv = threshold(ThresholdSpec(fam, n, d, delta))
        P = build_distribution(spec, n, d, delta, rule, field)
        lam = "none" if isinstance(rule, Empirical) else resolve_lambda(rule, d)
        losses = mc.simulate_losses(P, rule, n, reps, rs, workers)
        est = mc.tail_from_losses(losses, tv.value)
        q = float(np.quantile(losses, 1.0 - delta, method="higher"))
        rule_name = str(rule)
    else:
        variant = statistic.split("_", 1)[1]
        P = build_distribution(spec, n, d, delta, LAPLACE, field)
        res = mc.residual_tail_check(P, n, variant, delta, reps, rs, workers)
        fam = Family.LEM6_RESIDUAL_LAPLACE if variant == "laplace" else Family.LEM6_RESIDUAL_CONF
        tv = threshold(ThresholdSpec(fam, n, d, delta))
        est, lam, q = res.estimate, res.lam, res.quantile(1.0 - delta)
        rule_name = "laplace" if variant == "laplace" else str(ConfidenceDependent(delta))
    mult = _float(cfg, "multiplier", tv.multiplier)
    bound = mult * delta
    holds = est.consistent_with_at_most(bound)
    return [exp, label, rule_name, statistic, n, d, delta, L, lam, tv.family.value, tv.value,
            mult, bound, est.exceed_count, est.replications, est.point, est.ci_low, est.ci_high,
            est.infinite_count, q, tv.in_domain, holds, seed, stream]


def _tail_plot(path: Path, exp: str, curves, n: int, d: int, deltas) -> None:
    Ls = sorted(math.log(1.0 / x) for x in deltas)
    fine = np.linspace(Ls[0], Ls[-1], 50) if len(Ls) > 1 else np.array(Ls)
    plot = Plot(f"{exp}: empirical (1-delta)-quantiles vs thresholds", "log(1/delta)",
                "chi-square loss", logy=True)
    for (label, nn, dd), pts in curves.items():
        pts = sorted(pts)
        plot.add(f"{label}, n={nn}, d={dd}", [a for a, _ in pts], [b for _, b in pts], markers=True)
    for fam in PLOT_FAMILIES:
        ys = [threshold(ThresholdSpec(fam, n, d, math.exp(-L))).value for L in fine]
        plot.add(f"{fam.value} (n={n})", fine, ys, dashed=True)
    plot.save(path)


# -- expectation ------------------------------------------------------------

EXPECT_KEYS = {"n", "d", "distribution", "distributions", "replications", "z_max", "delta"}
EXPECT_HEADER = ["experiment", "distribution", "n[count]", "d[count]", "closed_form[loss]",
                 "bound_d_minus_1_over_n_plus_1[loss]", "bound_d_over_n[loss]",
                 "mc_mean[loss]", "std_err[loss]", "gap_over_se", "replications[count]",
                 "holds", "seed", "stream_id"]


def cmd_expectation(cfg: dict, out: Path, seed: int, workers: int, timing: bool = False) -> int:
    _check_keys(cfg, EXPECT_KEYS)
    exp = str(cfg["experiment"])
    ns = _int_grid(cfg, "n")
    ds = _int_grid(cfg, "d", minimum=1)
    reps = _int(cfg, "replications", 100_000, minimum=2)
    z_max = _float(cfg, "z_max", 4.0)
    delta = _float(cfg, "delta") if "delta" in cfg else None
    rows, times, stream = [], [], 0
    curves = {}
    for si, spec in enumerate(_dist_specs(cfg)):
        label = dist_label(spec)
        for n, d in ((n, d) for n in ns for d in ds):
            t0 = time.perf_counter()
            P = build_distribution(spec, n, d, delta, LAPLACE, f"distributions[{si}]")
            closed = exact_laplace_chi2_expectation(P, n)
            losses = mc.simulate_losses(P, LAPLACE, n, reps, RngSeed(seed, stream), workers)
            mean = math.fsum(losses) / reps
            se = float(np.std(losses, ddof=1)) / math.sqrt(reps)
            gap = abs(mean - closed)
            # constant losses leave only rounding noise in se
            z = gap / max(se, 1e-12 * max(1.0, abs(closed)))
            mid, top = (d - 1) / (n + 1), d / n
            holds = closed <= mid <= top and z <= z_max
            rows.append([exp, label, n, d, closed, mid, top, mean, se, z, reps, holds, seed, stream])
            times.append(1000.0 * (time.perf_counter() - t0))
            curves.setdefault(f"{label}, d={d}", []).append((n, closed, mean))
            stream += 1
    header = list(EXPECT_HEADER)
    if timing:
        header.append("wall_time_ms")
        for r, t in zip(rows, times):
            r.append(round(t, 3))
    write_csv(out / f"{exp}.csv", header, rows)
    _write_timing(out, exp, times)

    plot = Plot(f"{exp}: expected Laplace chi-square loss", "n", "E[chi2]", logx=True, logy=True)
    for label, pts in curves.items():
        pts.sort()
        plot.add(f"{label} closed form", [p[0] for p in pts], [p[1] for p in pts])
        plot.add(f"{label} Monte Carlo", [p[0] for p in pts], [p[2] for p in pts], markers=True)
    grid = sorted(set(ns))
    for d in ds:
        plot.add(f"d/n, d={d}", grid, [d / n for n in grid], dashed=True)
    plot.save(out / f"{exp}.svg")
    for r in rows:
        print(f"{exp} {r[1]} n={r[2]}: closed={r[4]:.6g} mc={r[7]:.6g} "
              f"z={r[9]:.3g} {'PASS' if r[11] else 'FAIL'}")
    return EXIT_OK if all(r[11] for r in rows) else EXIT_VIOLATION


# -- lower-bound ------------------------------------------------------------

LOWER_KEYS = {"estimator", "estimators", "lemmas", "n", "d", "delta", "log_inv_delta", "kappa"}
LOWER_HEADER = ["experiment", "lemma", "estimator", "n[count]", "d[count]", "delta[prob]",
                "log_inv_delta", "kappa", "regime", "witness_j", "event_prob[prob]",
                "loss_on_event[loss]", "witness_term[loss]", "relaxed_bound[loss]",
                "threshold[loss]", "in_domain", "holds"]


def cmd_lower_bound(cfg: dict, out: Path, seed: int, workers: int, timing: bool = False) -> int:
    _check_keys(cfg, LOWER_KEYS)
    exp = str(cfg["experiment"])
    if "estimators" in cfg:
        tokens = cfg["estimators"]
        if not isinstance(tokens, list) or not tokens:
            raise ConfigError("estimators", "expected a nonempty list")
    elif "estimator" in cfg:
        tokens = [cfg["estimator"]]
    else:
        raise ConfigError("estimator", "name the estimator(s) to certify")
    lemmas = _as_list(cfg.get("lemmas", ["lemma1", "lemma2"]))
    for lem in lemmas:
        if lem not in ("lemma1", "lemma2"):
            raise ConfigError("lemmas", f"unknown lemma {lem!r}; expected lemma1 or lemma2")
    ns = _int_grid(cfg, "n")
    ds = _int_grid(cfg, "d", minimum=2)
    deltas = delta_grid(cfg)
    kappa = _float(cfg, "kappa", 1.0)
    if kappa < 1:
        raise ConfigError("kappa", "must be at least 1")
    rows, times = [], []
    for lem in lemmas:
        for tok in tokens:
            for n in ns:
                for d in ds:
                    for delta in deltas:
                        t0 = time.perf_counter()
                        rule = _rule(tok, delta, "estimators")
                        L = math.log(1.0 / delta)
                        if lem == "lemma2":
                            c = lemma2_certificate(rule, n, d, delta, kappa, strict=False)
                            ok, regime = lemma2_in_domain(n, d, delta, kappa), "two_point"
                        else:
                            c = lemma1_certificate(rule, n, d, delta, strict=False)
                            ok, regime = family_in_domain(n, d, delta), c.regime
                        rows.append([exp, lem, str(rule), n, d, delta, L,
                                     kappa if lem == "lemma2" else 1.0, regime, c.witness_j,
                                     c.event_prob, c.loss_on_event, c.witness_term,
                                     c.relaxed_bound, c.threshold, ok, c.holds])
                        times.append(1000.0 * (time.perf_counter() - t0))
    header = list(LOWER_HEADER)
    if timing:
        header.append("wall_time_ms")
        for r, t in zip(rows, times):
            r.append(round(t, 3))
    write_csv(out / f"{exp}.csv", header, rows)
    _write_timing(out, exp, times)
    failed = [r for r in rows if r[15] and not r[16]]
    in_dom = sum(1 for r in rows if r[15])
    print(f"{exp}: {len(rows)} certificates, {in_dom} in domain, {len(failed)} failed")
    return EXIT_VIOLATION if failed else EXIT_OK


# -- audit ------------------------------------------------------------------

AUDIT_KEYS = {"audits", "trials", "trials_per_audit"}
AUDIT_HEADER = ["experiment", "audit", "trials[count]", "violations[count]", "worst_slack",
                "asserting", "passed", "seed", "stream_id"]


def cmd_audit(cfg: dict, out: Path, seed: int, workers: int, timing: bool = False) -> int:
    _check_keys(cfg, AUDIT_KEYS)
    exp = str(cfg["experiment"])
    names = _as_list(cfg.get("audits", list(au.DEFAULT_SUITE)))
    if not names:
        raise ConfigError("audits", "list is empty")
    for name in names:
        if name not in au.AUDIT_NAMES:
            raise ConfigError("audits", f"unknown audit {name!r}; valid names: "
                              f"{', '.join(au.AUDIT_NAMES)}")
    trials = _int(cfg, "trials", 100_000, minimum=1)
    per = cfg.get("trials_per_audit", {})
    if not isinstance(per, dict):
        raise ConfigError("trials_per_audit", "expected an object mapping audit names to counts")
    rows, times = [], []
    for name in names:
        t0 = time.perf_counter()
        k = _int(per, name, trials, minimum=1) if name in per else trials
        stream = au.AUDIT_NAMES.index(name)
        res = au.run_audit(name, k, RngSeed(seed, stream), workers)
        rows.append([exp, name, res.trials, res.violations, res.worst_slack,
                     res.asserting, res.passed, seed, stream])
        times.append(1000.0 * (time.perf_counter() - t0))
        if res.table and au.AUDIT_COLUMNS[name]:
            write_csv(out / f"{exp}_{name}_table.csv", au.AUDIT_COLUMNS[name], res.table)
        print(f"{name}: {res.violations} violations in {res.trials} trials, "
              f"worst slack {res.worst_slack:.4g} "
              f"{'PASS' if res.passed else 'FAIL'}{'' if res.asserting else ' (report only)'}")
    header = list(AUDIT_HEADER)
    if timing:
        header.append("wall_time_ms")
        for r, t in zip(rows, times):
            r.append(round(t, 3))
    write_csv(out / f"{exp}.csv", header, rows)
    _write_timing(out, exp, times)
    return EXIT_OK if all(r[6] for r in rows) else EXIT_VIOLATION


# -- thresholds -------------------------------------------------------------


def threshold_records(n: int, d: int, delta: float, kappa: float = 1.0) -> list[dict]:
    return [{"family": r.family.value, "value": r.value, "in_domain": r.in_domain,
             "side": r.side.value, "multiplier": r.multiplier}
            for r in compare_thresholds(n, d, delta, kappa)]


def format_threshold_table(records: list[dict]) -> str:
    lines = [f"{'family':<22} {'value':>14} {'in_domain':>9} {'side':>6} {'multiplier':>10}"]
    for r in records:
        lines.append(f"{r['family']:<22} {r['value']:>14.6g} {str(r['in_domain']).lower():>9} "
                     f"{r['side']:>6} {r['multiplier']:>10g}")
    return "\n".join(lines) + "\n"


def cmd_thresholds(cfg: dict, out: Path | None, json_path: str | None) -> int:
    _check_keys(cfg, {"n", "d", "delta", "log_inv_delta", "kappa"})
    n = _int(cfg, "n", minimum=1)
    d = _int(cfg, "d")
    deltas = delta_grid(cfg)
    if len(deltas) != 1:
        raise ConfigError("delta", "thresholds takes a single delta")
    kappa = _float(cfg, "kappa", 1.0)
    recs = threshold_records(n, d, deltas[0], kappa)
    sys.stdout.write(format_threshold_table(recs))
    payload = {"n": n, "d": d, "delta": deltas[0], "kappa": kappa, "rows": recs}
    if json_path:
        try:
            Path(json_path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        except OSError as exc:
            raise ConfigError("--json", f"cannot write {json_path!r}: {exc.strerror}") from exc
    if out is not None:
        write_csv(out / "thresholds.csv",
                  ["family", "value[loss]", "in_domain", "side", "multiplier"],
                  [[r["family"], r["value"], r["in_domain"], r["side"], r["multiplier"]]
                   for r in recs])
    return EXIT_OK


# -- entry point ------------------------------------------------------------


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < _U64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


class _Parser(argparse.ArgumentParser):
    # usage errors share the config-error exit code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chi2tail", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "tail-risk": "empirical tail of the loss (or residual) against threshold families",
        "expectation": "closed-form expected loss against Monte Carlo",
        "lower-bound": "deterministic lower-bound certificates on two-point families",
        "audit": "randomized and grid audits of the pointwise inequalities",
        "thresholds": "print every threshold family at one (n, d, delta, kappa)",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", help="JSON config path or recipe:NAME")
        p.add_argument("--out", help="output directory", default=None if name == "thresholds" else "chi2tail-out")
        p.add_argument("--seed", type=_u64, help="master seed (overrides the config)")
        p.add_argument("--workers", type=_positive, default=None,
                       help="worker processes (default: $CHI2_WORKERS or 1)")
        if name == "thresholds":
            p.add_argument("--n", type=int)
            p.add_argument("--d", type=int)
            p.add_argument("--delta", type=float)
            p.add_argument("--kappa", type=float)
            p.add_argument("--json", dest="json_path", help="also write the table as JSON")
        else:
            p.add_argument("--timing", action="store_true",
                           help="add a wall_time_ms column (makes the CSV run-dependent)")
    return parser


COMMANDS = {
    "tail-risk": cmd_tail_risk,
    "expectation": cmd_expectation,
    "lower-bound": cmd_lower_bound,
    "audit": cmd_audit,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        declared = cfg.pop("command", args.command)
        cfg.setdefault("experiment", args.command.replace("-", "_"))
        if declared != args.command:
            raise ConfigError("command", f"config is for {declared!r}, not {args.command!r}")
        workers = args.workers if args.workers is not None else mc.default_workers()
        if args.command == "thresholds":
            for key in ("n", "d", "delta", "kappa"):
                if getattr(args, key) is not None:
                    cfg[key] = getattr(args, key)
            cfg.pop("experiment", None)
            out = _outdir(args.out) if args.out else None
            return cmd_thresholds(cfg, out, args.json_path)
        seed = _seed(cfg, args.seed)
        cfg.pop("seed", None)
        out = _outdir(args.out)
        return COMMANDS[args.command](cfg, out, seed, workers, args.timing)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
    except (ValidationError, PreconditionError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
