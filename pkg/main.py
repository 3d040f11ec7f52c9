#!/usr/bin/env python3
"""
Twisted traces of singular moduli - command line
================================================

Subcommands: forms, cusps, trace, series, sieve, congruence-scan, verify.
Exit codes: 0 success, 1 verification failure, 2 invalid input, 3 precision exhausted.
"""

import argparse
import csv
import io
import json
import logging
import sys
import traceback
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from src.pipeline.moduli.congruences import progression_primes, reverify_report
from src.pipeline.moduli.engine import TraceEngine
from src.pipeline.moduli.errors import InvalidInputError, ModuliError, PrecisionExhaustedError
from src.pipeline.moduli.models import Config, GenusCharSpec
from src.pipeline.moduli.modfunc import load_function
from src.pipeline.moduli.qseries import sieve
from src.pipeline.moduli.verify import CASE_ALIASES, CASES, run_case

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s',
    datefmt='%H:%M:%S'
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INVALID_INPUT = 2
EXIT_PRECISION = 3


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--bits', type=int, help='starting working precision in bits')
    common.add_argument('--bits-cap', type=int, help='precision cap for adaptive doubling (raised for large indices)')
    common.add_argument('--threads', type=int, help='worker processes for trace tables')
    common.add_argument('--format', choices=['json', 'csv', 'pretty'], default='json')
    common.add_argument('--seed', type=int, help='seed for randomized checks')
    common.add_argument('--out', type=str, help='write the output here instead of stdout')
    common.add_argument('--no-cache', action='store_true', help='neither read nor write the trace cache')
    common.add_argument('--verbose', action='store_true')
    return common


def _character_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--f', dest='function', default='builtin:J',
                        help='builtin:NAME, a JSON file or inline JSON expression')
    parser.add_argument('--level', type=int, default=1)
    parser.add_argument('--delta', type=int, default=1)
    parser.add_argument('--root', type=int, help='r with r^2 = delta mod 4N (smallest by default)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Twisted traces of singular moduli")
    subparsers = parser.add_subparsers(dest="mode", required=True)
    common = _common_flags()

    forms_parser = subparsers.add_parser("forms", parents=[common], help="Gamma_0(N) classes of discriminant -D")
    forms_parser.add_argument('--disc', type=int, required=True)
    forms_parser.add_argument('--level', type=int, default=1)

    cusps_parser = subparsers.add_parser("cusps", parents=[common], help="cusp representatives of Gamma_0(N)")
    cusps_parser.add_argument('--level', type=int, default=1)

    trace_parser = subparsers.add_parser("trace", parents=[common], help="twisted traces at one index or a range")
    _character_flags(trace_parser)
    indices = trace_parser.add_mutually_exclusive_group(required=True)
    indices.add_argument('--index', type=int)
    indices.add_argument('--range', type=int, nargs=2, metavar=('FIRST', 'LAST'))

    series_parser = subparsers.add_parser("series", parents=[common], help="generating series of the traces")
    _character_flags(series_parser)
    series_parser.add_argument('--max', type=int, required=True, dest='d_max')

    sieve_parser = subparsers.add_parser("sieve", parents=[common], help="keep coefficients with (n/t) = value")
    sieve_parser.add_argument('--t', type=int, required=True)
    sieve_parser.add_argument('--in', dest='input', required=True, help='series JSON document')
    sieve_parser.add_argument('--value', type=int, default=-1, choices=[-1, 0, 1])

    scan_parser = subparsers.add_parser("congruence-scan", parents=[common],
                                        help="residues of traces along primes r = -1 mod 4 t^2 N p^nu")
    _character_flags(scan_parser)
    scan_parser.add_argument('--p', type=int, required=True)
    scan_parser.add_argument('--nu', type=int, default=1)
    scan_parser.add_argument('--t', type=int, required=True)
    scan_parser.add_argument('--m-exp', type=int, default=0)
    scan_parser.add_argument('--r-count', type=int, default=1)
    scan_parser.add_argument('--r', type=int, nargs='+', dest='r_values', help='explicit candidate primes')
    scan_parser.add_argument('--n-max', type=int, default=8)
    scan_parser.add_argument('--reverify', action='store_true', help='recompute residues at doubled precision')

    verify_parser = subparsers.add_parser("verify", parents=[common], help="run a verification case")
    verify_parser.add_argument('--case', required=True, choices=sorted([*CASES, *CASE_ALIASES]))
    verify_parser.add_argument('--max', type=int, dest='max_D')
    verify_parser.add_argument('--max-m', type=int)
    verify_parser.add_argument('--samples', type=int)
    verify_parser.add_argument('--n-max', type=int)
    verify_parser.add_argument('--r-count', type=int)

    return parser


def _config_from(args: argparse.Namespace) -> Config:
    return Config.from_env(
        bits=args.bits,
        bits_cap=args.bits_cap,
        threads=args.threads,
        output_format=args.format,
        seed=args.seed,
        use_cache=False if args.no_cache else None,
    )


def _render(document: Any, rows: List[Dict[str, Any]], fmt: str) -> str:
    if fmt == 'json':
        return json.dumps(document, indent=2, sort_keys=True)
    if not rows:
        return ""
    columns = list(rows[0])
    if fmt == 'csv':
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator='\n')
        writer.writeheader()
        writer.writerows(rows)
        return buffer.getvalue().rstrip('\n')
    widths = {c: max(len(c), *(len(str(row[c])) for row in rows)) for c in columns}
    lines = ["  ".join(c.rjust(widths[c]) for c in columns)]
    lines += ["  ".join(str(row[c]).rjust(widths[c]) for c in columns) for row in rows]
    return "\n".join(lines)


def _emit(document: Any, rows: List[Dict[str, Any]], args: argparse.Namespace) -> None:
    text = _render(document, rows, args.format)
    if args.out:
        with open(args.out, 'w', encoding='utf-8') as fh:
            fh.write(text + "\n")
        logger.info(f"Wrote {args.mode} output to {args.out}")
    else:
        print(text)


def _character(args: argparse.Namespace):
    f = load_function(args.function, args.level)
    spec = GenusCharSpec.for_discriminant(args.delta, args.level, args.root)
    return f, spec


def cmd_forms(engine: TraceEngine, args: argparse.Namespace) -> int:
    rows = engine.class_table(args.disc, args.level)
    _emit(rows, rows, args)
    return EXIT_OK


def cmd_cusps(engine: TraceEngine, args: argparse.Namespace) -> int:
    rows = engine.cusp_table(args.level)
    _emit(rows, rows, args)
    return EXIT_OK


def cmd_trace(engine: TraceEngine, args: argparse.Namespace) -> int:
    f, spec = _character(args)
    indices = [args.index] if args.index is not None else range(args.range[0], args.range[1] + 1)
    table = engine.build_trace_table(f, args.level, spec, indices)
    document = table.to_document()
    _emit(document, document["entries"], args)
    return EXIT_OK


def cmd_series(engine: TraceEngine, args: argparse.Namespace) -> int:
    f, spec = _character(args)
    series = engine.generating_series(f, args.level, spec, args.d_max)
    document = series.to_document()
    rows = [{"n": n, "coeff": c} for n, c in document["terms"]]
    _emit(document, rows, args)
    return EXIT_OK


def cmd_sieve(engine: TraceEngine, args: argparse.Namespace) -> int:
    series = engine.load_series_json(args.input)
    if args.t == 1 and args.value == -1:
        logger.warning("sieve with t = 1 keeps nothing: (n/1) = 1 for every n")
    document = sieve(args.t, series, args.value).to_document()
    rows = [{"n": n, "coeff": c} for n, c in document["terms"]]
    _emit(document, rows, args)
    return EXIT_OK


def cmd_congruence_scan(engine: TraceEngine, args: argparse.Namespace) -> int:
    f, spec = _character(args)
    candidates = args.r_values or progression_primes(args.t, args.level, args.p, args.nu, args.r_count)
    reports = engine.scan(f, args.level, spec, args.p, args.nu, args.t, args.m_exp, candidates, args.n_max)
    status = EXIT_OK
    if args.reverify:
        for report in reports:
            fresh = reverify_report(f, report, spec.root, engine.config)
            if fresh.checked != report.checked:
                logger.error(f"r={report.r}: residues were not reproduced at doubled precision")
                status = EXIT_VERIFY_FAILED
    if not any(report.verdict for report in reports):
        logger.warning(f"no candidate r gave a congruence mod {args.p}^{args.nu}")
        status = EXIT_VERIFY_FAILED
    document = {
        "params": {"function": args.function, "N": args.level, "delta": args.delta, "p": args.p,
                   "nu": args.nu, "t": args.t, "m_exp": args.m_exp, "n_max": args.n_max},
        "reports": [report.model_dump(mode="json") for report in reports],
    }
    rows = [
        {"r": rep.r, "n": check.n, "index": check.index, "residue": check.residue,
         "omega": rep.omega, "verdict": rep.verdict}
        for rep in reports for check in rep.checked
    ]
    _emit(document, rows, args)
    return status


def cmd_verify(engine: TraceEngine, args: argparse.Namespace) -> int:
    params = {"max_D": args.max_D, "max_m": args.max_m, "samples": args.samples,
              "n_max": args.n_max, "r_count": args.r_count}
    accepted = {
        "anchors": ("max_D",), "negative-squares": ("max_m",), "dual-path": ("samples", "max_D"),
        "genus": ("samples",), "integrality": ("max_D",), "operators": (),
        "evaluator": ("samples",), "congruence": ("n_max", "r_count"),
    }[CASE_ALIASES.get(args.case, args.case)]
    ignored = [k for k, v in params.items() if v is not None and k not in accepted]
    if ignored:
        logger.warning(f"verify {args.case} ignores {', '.join(ignored)}")
    result = run_case(args.case, engine.config, **{k: params[k] for k in accepted})
    document = result.model_dump()
    rows = [{"case": result.case, "passed": result.passed, "checked": result.checked,
             "failures": len(result.failures)}]
    _emit(document, rows, args)
    return EXIT_OK if result.passed else EXIT_VERIFY_FAILED


COMMANDS = {
    "forms": cmd_forms,
    "cusps": cmd_cusps,
    "trace": cmd_trace,
    "series": cmd_series,
    "sieve": cmd_sieve,
    "congruence-scan": cmd_congruence_scan,
    "verify": cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entrypoint; returns the process exit code."""
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        engine = TraceEngine(_config_from(args))
        return COMMANDS[args.mode](engine, args)
    except PrecisionExhaustedError as e:
        logger.error(f"Precision exhausted: {e}")
        return EXIT_PRECISION
    except (InvalidInputError, ValidationError) as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_INVALID_INPUT
    except ModuliError as e:
        logger.error(f"{args.mode} failed: {e}")
        return EXIT_INVALID_INPUT
    except Exception as e:
        logger.error(f"{args.mode} failed unexpectedly: {e}")
        traceback.print_exc()
        return EXIT_VERIFY_FAILED


if __name__ == '__main__':
    sys.exit(main())
