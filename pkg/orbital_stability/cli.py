# orbital_stability/cli.py
"""Command-line driver: ``python -m orbital_stability <command> [flags]``."""
from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from functools import partial
from typing import Dict, List, Optional, Sequence

from .characters import (
    DirichletCharacter,
    character_from_spec,
    dual_char_sum_G,
    gauss_sum,
    kronecker_character,
    local_character_at,
    local_character_from_spec,
    ramanujan_sum,
)
from .config import COMMANDS, RunConfig, load_config_file
from .errors import (
    CharacterConstructionError,
    DomainError,
    FitError,
    HeckeViolationError,
    InvalidArgument,
    NewformParseError,
    UnsupportedError,
)
from .geometric_global import (
    LATTICE,
    SHARP,
    dual_kernel_eval,
    dual_support_check,
    small_cell_bruteforce,
    small_cell_local_eval,
    stability_threshold_scan,
)
from .lfunc_moments import moment_scan
from .newforms import SCAN_LABELS, ingest_newforms, newforms_from_eta
from .orbital_local import (
    LocalPlaceData,
    charsum_J1,
    charsum_J2,
    charsum_S,
    derived_t_grid,
    eval_orbital_bruteforce,
    eval_orbital_cases,
    eval_orbital_unramified,
    make_place,
    vanishing_predicted,
)
from .padic_core import parse_rational, valuation
from .reports import Report, dumps_json, emit_report
from .scan import ordered_map

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_IO = 4

# fundamental discriminant used when only --q is given
DEFAULT_KRONECKER = {3: -3, 4: -4, 5: 5, 7: -7, 8: 8}
MOMENT_CHARACTERS = ("trivial", "kronecker:-4", "kronecker:5")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orbital-stability",
        description="Exact local orbital integrals, support stability scans and twisted L-value moments.",
        allow_abbrev=False,
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON run configuration; explicit flags override it")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--p", type=int)
    parser.add_argument("--n", type=int)
    parser.add_argument("--m", type=int)
    parser.add_argument("--t", help="rational a/b")
    parser.add_argument("--chi", help="trivial | kronecker:<d> | p:<p>,n:<n>,g:<a>[;...]")
    parser.add_argument("--omega", help="local character p:<p>,n:<n>,g:<a>[,u:<a/b>]")
    parser.add_argument("--q", type=int)
    parser.add_argument("--level", type=int)
    parser.add_argument("--weight", type=int)
    parser.add_argument("--umax", help="rational a/b, default 1")
    parser.add_argument("--m-min", dest="m_min", type=int)
    parser.add_argument("--m-max", dest="m_max", type=int)
    parser.add_argument("--terms", type=int)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--format", choices=["csv", "json"])
    parser.add_argument("--out", help="output path (standard output when omitted)")
    parser.add_argument("--coeffs", help="newform file, one JSON record per line")
    parser.add_argument("--evaluator", choices=["cases", "bruteforce", "both"])
    parser.add_argument("--sigma-plus-rule", dest="sigma_plus_rule", choices=[SHARP, LATTICE])
    parser.add_argument("--threshold-c", dest="threshold_c", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--cutoff", type=int)
    parser.add_argument("--kind", help="charsum: S | J1 | J2 | gauss | G | ramanujan; dualkernel: kernel | support")
    parser.add_argument("--k", type=int, help="shift k, or the summation index for G / ramanujan")
    parser.add_argument("--r1", type=int)
    parser.add_argument("--r2", type=int)
    parser.add_argument("--e-x", dest="e_x", type=int)
    parser.add_argument("--s", help="rational a/b, default 1/2")
    parser.add_argument("--label", dest="labels", action="append")
    parser.add_argument("--count", type=int, help="coefficient count K for newforms")
    return parser


# ---------- argument helpers ----------

def _require(cfg: RunConfig, name: str):
    value = getattr(cfg, name)
    if value is None:
        raise InvalidArgument(f"{cfg.command} needs --{name.replace('_', '-')}")
    return value


def _place(cfg: RunConfig) -> LocalPlaceData:
    p = _require(cfg, "p")
    chi = local_character_at(p, cfg.chi)
    omega = local_character_from_spec(cfg.omega) if cfg.omega else None
    place = make_place(p, cfg.get("m", 0), chi, omega)
    if cfg.n is not None and cfg.n != place.n:
        raise InvalidArgument(f"--n {cfg.n} does not match the conductor exponent {place.n} of --chi at {p}")
    return place


def _global_character(cfg: RunConfig) -> DirichletCharacter:
    if cfg.chi:
        chi = character_from_spec(cfg.chi)
        if cfg.q is not None and chi.modulus != cfg.q:
            raise InvalidArgument(f"--chi has modulus {chi.modulus}, --q says {cfg.q}")
        return chi
    q = _require(cfg, "q")
    if q == 1:
        return character_from_spec("trivial")
    if q not in DEFAULT_KRONECKER:
        raise InvalidArgument(f"no default character for q={q}; pass --chi")
    return kronecker_character(DEFAULT_KRONECKER[q])


def _write(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _evaluate(place: LocalPlaceData, t: Fraction, evaluator: str):
    if place.n == 0:
        return eval_orbital_unramified(place, t)
    if evaluator == "bruteforce":
        return eval_orbital_bruteforce(place, t)
    return eval_orbital_cases(place, t)


# ---------- commands ----------

def cmd_orbital_eval(cfg: RunConfig) -> None:
    place = _place(cfg)
    t = parse_rational(_require(cfg, "t"))
    evaluator = cfg.get("evaluator", "cases")
    value = _evaluate(place, t, "bruteforce" if evaluator == "bruteforce" else "cases")
    payload = {
        "p": place.p,
        "n": place.n,
        "m": place.m,
        "t": str(t),
        "class": place.classification,
        "vanishing_predicted": vanishing_predicted(place, t),
        **value.to_json(),
    }
    if evaluator == "both" and place.n >= 1:
        payload["evaluators_agree"] = value.value.equals(eval_orbital_bruteforce(place, t).value)
    _write(dumps_json(payload), cfg.out)


def _scan_point(place: LocalPlaceData, evaluator: str, t: Fraction) -> Dict[str, object]:
    value = _evaluate(place, t, "bruteforce" if evaluator == "bruteforce" else "cases")
    z = value.value.to_complex()
    row = {
        "p": place.p,
        "n": place.n,
        "m": place.m,
        "t": str(t),
        "e_t": valuation(t, place.p),
        "e_1mt": valuation(1 - t, place.p),
        "re": z.real,
        "im": z.imag,
        "exact_zero": value.value.is_exact_zero(),
        "vanishing_predicted": vanishing_predicted(place, t),
    }
    if evaluator == "both" and place.n >= 1:
        row["evaluators_agree"] = value.value.equals(eval_orbital_bruteforce(place, t).value)
    return row


def cmd_orbital_scan(cfg: RunConfig) -> None:
    place = _place(cfg)
    evaluator = cfg.get("evaluator", "cases")
    grid = derived_t_grid(place.p, max(place.n, 1), cfg.get("count", 200))
    rows = ordered_map(partial(_scan_point, place, evaluator), grid, cfg.get("threads", 1))
    columns = ["p", "n", "m", "t", "e_t", "e_1mt", "re", "im", "exact_zero", "vanishing_predicted"]
    dtypes = {
        "p": "int", "n": "int", "m": "int", "t": "str", "e_t": "int", "e_1mt": "int",
        "re": "float", "im": "float", "exact_zero": "bool", "vanishing_predicted": "bool",
    }
    if evaluator == "both" and place.n >= 1:
        columns.append("evaluators_agree")
        dtypes["evaluators_agree"] = "bool"
    summary = {
        "points": len(rows),
        "exact_zero": sum(1 for r in rows if r["exact_zero"]),
        "predicted_but_nonzero": sum(1 for r in rows if r["vanishing_predicted"] and not r["exact_zero"]),
    }
    emit_report(Report("orbital-scan", columns, rows, summary, dtypes), cfg.get("format", "csv"), cfg.out)


def cmd_stability_scan(cfg: RunConfig) -> None:
    chi = _global_character(cfg)
    m_min = cfg.get("m_min", 1)
    m_max = _require(cfg, "m_max")
    if m_min < 1 or m_max < m_min:
        raise InvalidArgument(f"level range [{m_min}, {m_max}] is empty or starts below 1")
    report = stability_threshold_scan(
        chi,
        range(m_min, m_max + 1),
        parse_rational(cfg.get("umax", "1")),
        cfg.get("sigma_plus_rule", SHARP),
        cfg.get("evaluator", "cases"),
        cfg.get("threads", 1),
    )
    emit_report(report.as_report(), cfg.get("format", "csv"), cfg.out)


def cmd_charsum(cfg: RunConfig) -> None:
    kind = _require(cfg, "kind")
    payload: Dict[str, object] = {"kind": kind}
    if kind == "ramanujan":
        p, m, e_x = _require(cfg, "p"), _require(cfg, "k"), _require(cfg, "e_x")
        payload["value"] = str(ramanujan_sum(p, m, e_x))
        _write(dumps_json(payload), cfg.out)
        return
    place = _place(cfg)
    if kind == "S":
        value = charsum_S(place, _require(cfg, "k"), _require(cfg, "t"))
    elif kind == "J1":
        value = charsum_J1(place, _require(cfg, "r1"), _require(cfg, "t"))
    elif kind == "J2":
        value = charsum_J2(place, _require(cfg, "r1"), _require(cfg, "r2"), _require(cfg, "k"), _require(cfg, "t"))
    elif kind == "gauss":
        value = gauss_sum(place.chi.unit_part)
    elif kind == "G":
        value = dual_char_sum_G(place, _require(cfg, "k"))
    else:
        raise InvalidArgument(f"unknown charsum kind '{kind}' (S, J1, J2, gauss, G, ramanujan)")
    payload["value"] = value.to_json()
    _write(dumps_json(payload), cfg.out)


def cmd_smallcell(cfg: RunConfig) -> None:
    place = _place(cfg)
    e_x = _require(cfg, "e_x")
    s = parse_rational(cfg.get("s", "1/2"))
    closed = small_cell_local_eval(place, e_x, s)
    z = closed.to_complex()
    payload = {"p": place.p, "m": place.m, "n": place.n, "e_x": e_x, "s": str(s),
               "value": closed.to_json(), "re": z.real, "im": z.imag}
    if cfg.get("evaluator", "cases") in ("bruteforce", "both"):
        payload["bruteforce_agrees"] = closed.equals(small_cell_bruteforce(place, e_x, s))
    _write(dumps_json(payload), cfg.out)


def cmd_dualkernel(cfg: RunConfig) -> None:
    place = _place(cfg)
    if cfg.get("kind", "kernel") == "support":
        grid = [(e_y, e_b) for e_y in range(-1, 2) for e_b in range(place.m - 2, place.m + 2)]
        table = dual_support_check(place, grid)
        payload = {
            "p": place.p, "m": place.m, "n": place.n,
            "members": [[e_y, e_b] for (e_y, e_b), hit in sorted(table.items()) if hit],
            "grid": [[e_y, e_b] for e_y, e_b in grid],
        }
    else:
        e_x = _require(cfg, "e_x")
        value = dual_kernel_eval(place, e_x, cfg.cutoff)
        payload = {"p": place.p, "m": place.m, "n": place.n, "e_x": e_x, "value": value.to_json()}
    _write(dumps_json(payload), cfg.out)


def cmd_moment(cfg: RunConfig) -> None:
    forms = ingest_newforms(_require(cfg, "coeffs"))
    if cfg.level is not None:
        forms = [f for f in forms if f.level == cfg.level]
    if cfg.weight is not None:
        forms = [f for f in forms if f.weight == cfg.weight]
    specs: Sequence[str] = [cfg.chi] if cfg.chi else MOMENT_CHARACTERS
    characters = [(spec, character_from_spec(spec)) for spec in specs]
    report = moment_scan(
        forms,
        characters,
        cfg.get("threshold_c", 1.0),
        cfg.terms,
        cfg.get("tol", 1e-8),
        cfg.get("threads", 1),
    )
    emit_report(report, cfg.get("format", "csv"), cfg.out)


def cmd_newforms(cfg: RunConfig) -> None:
    out = _require(cfg, "out")
    forms = newforms_from_eta(cfg.get("labels", list(SCAN_LABELS)), cfg.get("count", 1000), out)
    logger.info("wrote %d newform record(s) to %s", len(forms), out)


HANDLERS = {
    "orbital-eval": cmd_orbital_eval,
    "orbital-scan": cmd_orbital_scan,
    "stability-scan": cmd_stability_scan,
    "charsum": cmd_charsum,
    "smallcell": cmd_smallcell,
    "dualkernel": cmd_dualkernel,
    "moment": cmd_moment,
    "newforms": cmd_newforms,
}

_CLI_ONLY = ("command", "config", "log_level")


def run_command(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    overrides = {k: v for k, v in vars(args).items() if k not in _CLI_ONLY}
    try:
        base = load_config_file(args.config) if args.config else RunConfig(args.command)
        cfg = base.merged({**overrides, "command": args.command})
        HANDLERS[cfg.command](cfg)
    except DomainError as exc:
        print(f"{args.command}: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except FitError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (InvalidArgument, CharacterConstructionError, UnsupportedError,
            NewformParseError, HeckeViolationError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"{args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"{args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main() -> None:
    sys.exit(run_command())
