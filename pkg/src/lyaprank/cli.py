"""Command-line interface.

    lyaprank freq      --config run.json
    lyaprank lyap      --config run.json [--n N] [--seed S]
    lyaprank spectrum  --config run.json [--out-dir DIR]
    lyaprank validate  [--config run.json] [--criteria 1 5 7] [--report out.json]
    lyaprank sequence  --config run.json --n N

Exit codes: 0 success, 2 configuration error, 3 numerical error.
The thread count for independent work items comes from ``LYAPRANK_THREADS``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from itertools import combinations
from pathlib import Path
from typing import Dict, List, Optional

from .acceptance import REFERENCE_CONSTANTS, run_acceptance
from .config import (
    build_bfree,
    build_family,
    build_grid,
    build_potential,
    build_source,
    build_substitution,
    load_config,
    validate_config,
)
from .errors import ConfigError, NumericError
from .lyapunov import (
    HypothesisWarning,
    bernoulli_lyapunov,
    closed_form_lyapunov,
    direct_estimate,
    markov_lyapunov,
)
from .mirsky import DEFAULT_PRECISION, bfree_exact_frequencies
from .multifractal import (
    derivative_check,
    pressure_csv,
    pressure_curve,
    spectrum,
    spectrum_csv,
    spectrum_svg,
)
from .returnwords import DEFAULT_MAX_RETURN_LEN, FrequencyTable, empirical_exact_frequencies
from .sequences import SequenceStream
from .substanalysis import (
    exact_frequencies_michel_ie,
    exact_frequencies_via_durand,
    exact_frequencies_via_michel,
)
from .words import word_str

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
DEFAULT_EMPIRICAL_N = 10 ** 6
MAX_TERMS_PRINTED = 24

SUBSTITUTION_METHODS = {
    "durand": exact_frequencies_via_durand,
    "michel": exact_frequencies_via_michel,
    "inclusionExclusion": exact_frequencies_michel_ie,
}


def _threads() -> int:
    raw = os.environ.get("LYAPRANK_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"LYAPRANK_THREADS must be an integer, got {raw!r}") from None


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _default_method(seq: dict) -> str:
    return {"substitution": "durand", "bfree": "mirsky", "bernoulli": "bernoulli",
            "markov": "markov"}.get(seq["type"], "empirical")


def frequency_table(cfg: dict, method: str) -> FrequencyTable:
    """One frequency table for the configured sequence."""
    seq = cfg.get("sequence")
    if seq is None:
        raise ConfigError("config field 'sequence' is required")
    if method == "empirical":
        n = cfg.get("n", DEFAULT_EMPIRICAL_N)
        x = SequenceStream(build_source(seq)).prefix(n)
        if x.size == 0 or not (x == 0).any():
            return FrequencyTable(0.0, {}, "empirical", {"n": int(x.size)})
        return empirical_exact_frequencies(x, cfg.get("max_return_len", DEFAULT_MAX_RETURN_LEN))
    if method in SUBSTITUTION_METHODS:
        if seq["type"] != "substitution":
            raise ConfigError(f"method {method!r} needs a substitution sequence")
        return SUBSTITUTION_METHODS[method](build_substitution(seq))
    if method == "mirsky":
        if seq["type"] != "bfree":
            raise ConfigError("method 'mirsky' needs a bfree sequence")
        return bfree_exact_frequencies(build_bfree(seq["set"]), cfg.get("precision", DEFAULT_PRECISION))
    raise ConfigError(f"method {method!r} does not produce a frequency table; use it with 'lyap'")


def cmd_freq(cfg: dict, out) -> int:
    methods = cfg.get("methods") or [cfg.get("method") or _default_method(cfg["sequence"])]
    tables = {m: frequency_table(cfg, m) for m in methods}
    for m, t in tables.items():
        out.write(f"# method={m}\n")
        out.write(f"# rho0={_fmt(t.rho0)}\n")
        out.write("word,F\n")
        for w, f in t.rows():
            out.write(f"{w},{_fmt(f)}\n")
    if len(tables) > 1:
        out.write("# pairwise max discrepancy\n")
        out.write("method_a,method_b,max_discrepancy\n")
        for a, b in combinations(methods, 2):
            out.write(f"{a},{b},{_fmt(tables[a].max_discrepancy(tables[b]))}\n")
    return EXIT_OK


def cmd_lyap(cfg: dict, out, err) -> int:
    seq = cfg.get("sequence")
    if seq is None or "family" not in cfg:
        raise ConfigError("'lyap' needs 'sequence' and 'family'")
    source = build_source(seq)
    family = build_family(cfg["family"], None)
    method = cfg.get("method") or _default_method(seq)
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always", HypothesisWarning)
        if method == "bernoulli":
            if seq["type"] != "bernoulli":
                raise ConfigError("method 'bernoulli' needs a bernoulli sequence")
            val = bernoulli_lyapunov(family, seq["p"])
        elif method == "markov":
            if seq["type"] != "markov":
                raise ConfigError("method 'markov' needs a markov sequence")
            val = markov_lyapunov(family, seq["P"])
        else:
            val = closed_form_lyapunov(family, frequency_table(cfg, method))
    for note in val.warnings:
        err.write(f"warning: {note}\n")
    out.write(f"method,{method}\n")
    out.write(f"closed_form,{_fmt(val.value)}\n")
    if val.degenerate_reason:
        out.write(f"degenerate_reason,{val.degenerate_reason}\n")
    rows = [] if val.degenerate_reason else val.breakdown_rows()
    for name, term in rows[:MAX_TERMS_PRINTED]:
        out.write(f"term:{name},{_fmt(term)}\n")
    if len(rows) > MAX_TERMS_PRINTED:
        out.write(f"terms_omitted,{len(rows) - MAX_TERMS_PRINTED}\n")
    n = cfg.get("n")
    if n:
        de = direct_estimate(family, source, n, cfg.get("norm", "frobenius"))
        out.write(f"direct_estimate,{_fmt(de.estimate)}\n")
        out.write(f"n,{n}\n")
        if math.isfinite(de.estimate) and math.isfinite(val.value):
            out.write(f"abs_gap,{_fmt(abs(de.estimate - val.value))}\n")
        elif de.degenerate_reason:
            out.write(f"direct_degenerate_reason,{de.degenerate_reason}\n")
    return EXIT_OK


def _weights_table(cfg: dict) -> FrequencyTable:
    w = cfg.get("weights")
    if w is None:
        raise ConfigError("'spectrum' needs 'weights'")
    sub_cfg = dict(cfg, sequence=w)
    return frequency_table(sub_cfg, cfg.get("method") or _default_method(w))


def cmd_spectrum(cfg: dict, out, out_dir: Optional[Path]) -> int:
    if "potential" not in cfg:
        raise ConfigError("'spectrum' needs 'potential'")
    pot = build_potential(cfg["potential"])
    table = _weights_table(cfg)
    grid = build_grid(cfg.get("grid"))
    curve = pressure_curve(pot, table, grid)
    spec = spectrum(pot, table, curve=curve)
    outputs = dict(cfg.get("output", {}))
    base = out_dir or Path(".")
    p_csv = base / outputs.get("pressure_csv", "pressure.csv")
    s_csv = base / outputs.get("spectrum_csv", "spectrum.csv")
    p_csv.parent.mkdir(parents=True, exist_ok=True)
    s_csv.parent.mkdir(parents=True, exist_ok=True)
    p_csv.write_text(pressure_csv(curve))
    s_csv.write_text(spectrum_csv(spec))
    if "svg" in outputs:
        (base / outputs["svg"]).write_text(spectrum_svg(curve, spec))
    lo, hi = curve.asymptotes
    out.write(f"pressure_csv,{p_csv}\n")
    out.write(f"spectrum_csv,{s_csv}\n")
    out.write(f"alpha_min,{_fmt(lo)}\n")
    out.write(f"alpha_max,{_fmt(hi)}\n")
    out.write(f"convex,{curve.is_convex()}\n")
    if cfg.get("check_derivative"):
        worst = max(r[3] for r in derivative_check(pot, table, grid))
        out.write(f"max_fd_rel_err,{_fmt(worst)}\n")
    return EXIT_OK


def cmd_validate(cfg: dict, out, ids: Optional[List[int]], report: Optional[str]) -> int:
    ids = ids or cfg.get("criteria")
    constants = cfg.get("constants")
    unknown = sorted(set(constants or {}) - set(REFERENCE_CONSTANTS))
    if unknown:
        raise ConfigError(f"unknown reference constants {unknown}")
    try:
        results = run_acceptance(ids, constants, threads=_threads())
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    for r in results:
        out.write(r.line() + "\n")
    report = report or cfg.get("output", {}).get("report")
    if report:
        Path(report).write_text(json.dumps([r.as_dict() for r in results], indent=2) + "\n")
    passed = sum(r.passed for r in results)
    out.write(f"{passed}/{len(results)} criteria passed\n")
    return EXIT_OK if passed == len(results) else EXIT_NUMERIC


def cmd_sequence(cfg: dict, out) -> int:
    seq = cfg.get("sequence")
    if seq is None:
        raise ConfigError("'sequence' needs a sequence descriptor")
    n = cfg.get("n")
    if not n:
        raise ConfigError("'sequence' needs a length (--n or config 'n')")
    x = SequenceStream(build_source(seq)).prefix(n)
    out.write(word_str(x.tolist()) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lyaprank",
                                description="Lyapunov exponents of matrix products with a rank-one factor")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [("freq", "exact frequencies of return words"),
                        ("lyap", "closed-form Lyapunov exponent and direct estimate"),
                        ("spectrum", "pressure function and dimension spectrum"),
                        ("validate", "run the acceptance criteria"),
                        ("sequence", "print a sequence prefix")]:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", "-c", help="JSON run configuration",
                        required=name not in ("validate",))
        sp.add_argument("--n", type=int, help="sequence length (overrides config)")
        sp.add_argument("--seed", type=int, help="seed for stochastic sequences (overrides config)")
        if name == "spectrum":
            sp.add_argument("--out-dir", type=Path, help="directory for output files")
        if name == "validate":
            sp.add_argument("--criteria", type=int, nargs="+", help="criterion ids to run")
            sp.add_argument("--report", help="write a JSON report here")
    return p


def _apply_overrides(cfg: dict, args) -> dict:
    cfg = dict(cfg)
    if args.n is not None:
        cfg["n"] = args.n
    if args.seed is not None:
        for key in ("sequence", "weights"):
            if key in cfg and "seed" in cfg[key] and cfg[key]["type"] in ("bernoulli", "markov"):
                cfg[key] = dict(cfg[key], seed=args.seed)
    return validate_config(cfg)


def main(argv: Optional[List[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else {}
        if cfg.get("command") not in (None, args.command):
            raise ConfigError(f"config is for command {cfg['command']!r}, not {args.command!r}")
        cfg = _apply_overrides(cfg, args)
        if args.command == "freq":
            return cmd_freq(cfg, out)
        if args.command == "lyap":
            return cmd_lyap(cfg, out, err)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, out, args.out_dir)
        if args.command == "validate":
            return cmd_validate(cfg, out, args.criteria, args.report)
        return cmd_sequence(cfg, out)
    except ConfigError as exc:
        err.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except NumericError as exc:
        err.write(f"numeric error: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERIC
    except OSError as exc:
        err.write(f"I/O error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
