#!/usr/bin/env python3
"""
UCQ Rewriter
Rewrites queries with negated atoms under disjunctive existential rules into
unions of conjunctive queries, classifies rule sets, runs a bounded chase as
an entailment oracle, and batch-rewrites query files with run statistics
"""

import sys
import argparse
import json
import logging
import os
import time
import tracemalloc
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from chase_oracle import DEFAULT_DEPTH, entails_with_result
from dlgp_io import Document, DlgpPrinter, DlgpSyntaxError, dumps, read_file
from fragments import is_fus_guaranteed
from logic_core import FreshNames
from reduction import ReductionError, normalize_problem
from rewrite_engine import (DEFAULT_K, DEFAULT_MAX_ITERATIONS, RewriteBudget, RewriteResult,
                            UcqRewriter)
from rule_model import KnowledgeBase, Ucq, ValidationError

logger = logging.getLogger(__name__)

# Exit codes
EXIT_CONVERGED = 0
EXIT_PARTIAL = 1
EXIT_INPUT_ERROR = 2
EXIT_TIMEOUT = 3

DLGP_EXTENSIONS = {'.dlgp'}
OUTPUT_DIR_NAME = 'REWRITINGS'
SEED_ENV = 'ECOMPLETO_SEED'
SUMMARY_PERCENTILES = (25, 50, 75)


@dataclass
class RunStats:
    """Measurements of one rewriting run"""
    runtime_ms: float = 0.0
    peak_memory_estimate_bytes: int = 0
    memory_estimate_kind: str = 'tracemalloc'
    iterations: int = 0
    cq_generated: int = 0
    cq_kept_after_prune: int = 0
    rules_generated: int = 0
    converged: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def name_seed() -> int:
    """First fresh-variable index, from ECOMPLETO_SEED (0 when unset)"""
    raw = os.environ.get(SEED_ENV, '').strip()
    if not raw:
        return 0
    try:
        return int(raw)
    except ValueError:
        logger.warning('Ignoring %s=%r: not an integer', SEED_ENV, raw)
        return 0


def parse_k(text: str) -> Optional[int]:
    """argparse type for --k: a natural number or 'inf'"""
    if text.lower() in ('inf', 'infinity', 'none'):
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a natural number or 'inf', got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f'k must not be negative, got {value}')
    return value


def is_dlgp_file(file_path: Path) -> bool:
    return file_path.suffix.lower() in DLGP_EXTENSIONS


def collect_files_from_folder(folder_path: Path, recursive: bool = False) -> List[Path]:
    """
    Collect all .dlgp files from a folder

    Args:
        folder_path: Path to the folder
        recursive: Whether to search subdirectories

    Returns:
        Sorted list of file paths
    """
    files = []
    if recursive:
        for root, dirs, filenames in os.walk(folder_path):
            # Skip output directories we create
            dirs[:] = [d for d in dirs if d != OUTPUT_DIR_NAME]
            for filename in filenames:
                file_path = Path(root) / filename
                if is_dlgp_file(file_path):
                    files.append(file_path)
    else:
        for item in folder_path.iterdir():
            if item.is_file() and is_dlgp_file(item):
                files.append(item)
    return sorted(files)


def load_queries(query_arg: Optional[str], kb_document: Document) -> Ucq:
    """
    Resolve --query: a .dlgp file of queries, or the label of a query in the kb file

    Without --query the queries of the kb file are used.

    Raises:
        ValueError: If no query can be found
    """
    if query_arg is None:
        if not kb_document.queries:
            raise ValueError('No query given and the knowledge base file holds none')
        return kb_document.ucq()
    path = Path(query_arg)
    if path.is_file():
        document = read_file(path)
        if not document.queries:
            raise ValueError(f'No query statement in {path}')
        return document.ucq()
    query = kb_document.query(query_arg)
    if query is None:
        raise ValueError(f"'{query_arg}' is neither a file nor the label of a query in the "
                         f"knowledge base")
    return Ucq((query,))


def run_rewriting(kb: KnowledgeBase, ucq: Ucq, k: Optional[int] = DEFAULT_K,
                  budget: Optional[RewriteBudget] = None, prune: bool = True, jobs: int = 1,
                  seed: int = 0) -> Tuple[RewriteResult, RunStats]:
    """
    Reduce the problem and rewrite it, measuring time and peak allocation

    Returns:
        Tuple of (result, stats)
    """
    started_tracing = not tracemalloc.is_tracing()
    if started_tracing:
        tracemalloc.start()
    tracemalloc.reset_peak()
    started = time.perf_counter()
    try:
        rules, positives = normalize_problem(kb, ucq, FreshNames(start=seed))
        rewriter = UcqRewriter(rules, positives, k=k, budget=budget, jobs=jobs, prune=prune,
                               name_seed=seed, answer_vars=ucq.answer_vars)
        result = rewriter.rewrite()
    finally:
        runtime_ms = (time.perf_counter() - started) * 1000.0
        peak = tracemalloc.get_traced_memory()[1]
        if started_tracing:
            tracemalloc.stop()
    stats = RunStats(
        runtime_ms=round(runtime_ms, 3),
        peak_memory_estimate_bytes=peak,
        iterations=result.stats.iterations,
        cq_generated=result.stats.cq_generated,
        cq_kept_after_prune=result.stats.cq_kept_after_prune,
        rules_generated=result.stats.rules_generated,
        converged=result.stats.converged,
    )
    return result, stats


def exit_code_for(result: RewriteResult) -> int:
    if result.converged:
        return EXIT_CONVERGED
    if result.stats.stop_reason == 'timeout' and result.stats.completed_iterations == 0:
        return EXIT_TIMEOUT
    return EXIT_PARTIAL


def ucq_to_dict(ucq: Ucq) -> Dict:
    """JSON shape of a UCQ: {cqs: [{atoms, answer_vars, origin, label}]}"""
    printer = DlgpPrinter()
    return {
        'cqs': [{
            'atoms': [printer.atom(a) for a in q.positives],
            'answer_vars': list(q.answer_vars),
            'origin': q.origin,
            'label': q.label,
        } for q in ucq]
    }


def format_ucq(ucq: Ucq, output_format: str = 'dlgp') -> str:
    if output_format == 'json':
        return json.dumps(ucq_to_dict(ucq), indent=2)
    return dumps(ucq)


def budget_from_args(args) -> RewriteBudget:
    return RewriteBudget(max_iterations=args.max_iterations, timeout_secs=args.timeout_secs)


def report_input_error(error: Exception, verbose: bool = False):
    """Print an input error and its diagnostics to stderr"""
    if isinstance(error, FileNotFoundError):
        print(f"[ERROR] {error}", file=sys.stderr)
    else:
        print(f"[ERROR] {error.__class__.__name__}: {error}", file=sys.stderr)
    for diagnostic in getattr(error, 'diagnostics', ())[1:]:
        print(f"  {diagnostic}", file=sys.stderr)
    if verbose:
        import traceback
        traceback.print_exc()


def write_stats(stats: RunStats, stats_out: Optional[str]):
    if stats_out:
        Path(stats_out).write_text(stats.to_json() + '\n', encoding='utf-8')
    else:
        print(stats.to_json(), file=sys.stderr)


def cmd_rewrite(args) -> int:
    """Rewrite the queries of --query under the rules of --kb"""
    try:
        kb_document = read_file(args.kb)
        ucq = load_queries(args.query, kb_document)
        result, stats = run_rewriting(kb_document.knowledge_base(), ucq, k=args.k,
                                      budget=budget_from_args(args), prune=not args.no_prune,
                                      jobs=args.jobs, seed=args.seed)
    except (FileNotFoundError, DlgpSyntaxError, ValidationError, ReductionError,
            ValueError) as e:
        report_input_error(e, args.verbose)
        return EXIT_INPUT_ERROR

    code = exit_code_for(result)
    if code != EXIT_TIMEOUT:
        text = format_ucq(result.ucq, args.format)
        if text:
            print(text)
    if code != EXIT_CONVERGED:
        print(f"[PARTIAL] Stopped before the fixpoint ({result.stats.stop_reason}) after "
              f"{result.stats.iterations} iteration(s)", file=sys.stderr)
    if args.stats or args.stats_out:
        write_stats(stats, args.stats_out)
    return code


def cmd_classify(args) -> int:
    """Print the fragment report of the rules of --kb (and of the negated queries of --query)"""
    try:
        kb_document = read_file(args.kb)
        kb = kb_document.knowledge_base()
        if args.query or kb_document.queries:
            ucq = load_queries(args.query, kb_document)
            rules, _ = normalize_problem(kb, ucq, FreshNames(start=args.seed))
            frozen = ucq.answer_vars
        else:
            rules, frozen = kb.rules, ()
        report = is_fus_guaranteed(rules, frozen)
    except (FileNotFoundError, DlgpSyntaxError, ValidationError, ReductionError,
            ValueError) as e:
        report_input_error(e, args.verbose)
        return EXIT_INPUT_ERROR
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_CONVERGED


def cmd_oracle(args) -> int:
    """Decide entailment with the bounded chase; prints true or unknown"""
    try:
        kb_document = read_file(args.kb)
        kb = kb_document.knowledge_base()
        facts = read_file(args.facts).knowledge_base().facts if args.facts else kb.facts
        ucq = load_queries(args.query, kb_document)
        rules, positives = normalize_problem(kb, ucq, FreshNames(start=args.seed))
        answer, result = entails_with_result(rules, facts, positives, max_depth=args.depth)
    except (FileNotFoundError, DlgpSyntaxError, ValidationError, ReductionError,
            ValueError) as e:
        report_input_error(e, args.verbose)
        return EXIT_INPUT_ERROR
    print(answer)
    if args.verbose:
        print(f"depth={result.depth} open_branches={len(result.branches)} "
              f"saturated={result.saturated} overflow={result.overflow}", file=sys.stderr)
    return EXIT_CONVERGED


def summarize(values: Sequence[float]) -> Dict[str, float]:
    """count, mean, std, min, quartiles and max of a sample"""
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        return {'count': 0}
    quartiles = np.percentile(data, SUMMARY_PERCENTILES)
    return {
        'count': int(data.size),
        'mean': float(np.mean(data)),
        'std': float(np.std(data)),
        'min': float(np.min(data)),
        '25%': float(quartiles[0]),
        '50%': float(quartiles[1]),
        '75%': float(quartiles[2]),
        'max': float(np.max(data)),
    }


def _format_summary(name: str, summary: Dict[str, float]) -> str:
    if not summary.get('count'):
        return f"  {name}: no data"
    cells = ', '.join(f"{key}={value:.3f}" if isinstance(value, float) else f"{key}={value}"
                      for key, value in summary.items())
    return f"  {name}: {cells}"


def rewrite_query_file(query_path: Path, kb: KnowledgeBase, args,
                       output_dir: Path) -> List[Tuple[str, Optional[RunStats], int]]:
    """
    Rewrite every query of a file on its own, writing one .dlgp file per query

    Returns:
        List of (name, stats or None on error, exit code) per query
    """
    document = read_file(query_path)
    outcomes = []
    for index, query in enumerate(document.queries, 1):
        name = f"{query_path.stem}.{query.label or f'q{index}'}"
        try:
            result, stats = run_rewriting(kb, Ucq((query,)), k=args.k,
                                          budget=budget_from_args(args),
                                          prune=not args.no_prune, jobs=args.jobs,
                                          seed=args.seed)
        except (ValidationError, ReductionError, ValueError) as e:
            logger.debug('Query %s failed', name, exc_info=True)
            outcomes.append((f'{name}: {e}', None, EXIT_INPUT_ERROR))
            continue
        (output_dir / f'{name}.dlgp').write_text(dumps(result.ucq) + '\n', encoding='utf-8')
        outcomes.append((name, stats, exit_code_for(result)))
    return outcomes


def cmd_batch(args) -> int:
    """Rewrite every query of a file or folder of .dlgp files, with a summary"""
    try:
        kb = read_file(args.kb).knowledge_base()
    except (FileNotFoundError, DlgpSyntaxError, ValidationError, ValueError) as e:
        report_input_error(e, args.verbose)
        return EXIT_INPUT_ERROR

    path = Path(args.queries)
    if path.is_dir():
        files = collect_files_from_folder(path, args.recursive)
        default_output = path / OUTPUT_DIR_NAME
    elif path.is_file():
        files = [path]
        default_output = path.parent / OUTPUT_DIR_NAME
    else:
        print(f"[ERROR] Path not found: {path}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    if not files:
        print(f"No query files found in: {path}")
        return EXIT_CONVERGED

    output_dir = Path(args.output_dir) if args.output_dir else default_output
    output_dir.mkdir(parents=True, exist_ok=True)
    if args.verbose:
        print(f"Writing rewritings to {output_dir}")

    outcomes = []
    for file_path in files:
        try:
            outcomes.extend(rewrite_query_file(file_path, kb, args, output_dir))
        except (DlgpSyntaxError, ValueError) as e:
            outcomes.append((f'{file_path.name}: {e}', None, EXIT_INPUT_ERROR))
            if args.verbose:
                import traceback
                traceback.print_exc()

    converged = partial = errors = 0
    for i, (name, stats, code) in enumerate(outcomes, 1):
        prefix = f"[{i}/{len(outcomes)}]"
        if stats is None:
            print(f"{prefix} [ERROR] {name}", file=sys.stderr)
            errors += 1
        elif code == EXIT_CONVERGED:
            print(f"{prefix} [OK] {name}: {stats.cq_kept_after_prune} CQs "
                  f"in {stats.runtime_ms:.1f} ms")
            converged += 1
        else:
            print(f"{prefix} [PARTIAL] {name}: {stats.cq_kept_after_prune} CQs "
                  f"in {stats.runtime_ms:.1f} ms")
            partial += 1

    measured = [stats for _, stats, _ in outcomes if stats is not None]
    print(f"\n{'='*60}")
    print("SUMMARY")
    print('='*60)
    print(f"  Converged: {converged}")
    print(f"  Partial:   {partial}")
    print(f"  Errors:    {errors}")
    print(f"  Total:     {len(outcomes)}")
    print(_format_summary('runtime_ms', summarize([s.runtime_ms for s in measured])))
    print(_format_summary('peak_memory_bytes',
                          summarize([s.peak_memory_estimate_bytes for s in measured])))

    if errors:
        return EXIT_INPUT_ERROR
    return EXIT_PARTIAL if partial else EXIT_CONVERGED


def add_common_options(parser: argparse.ArgumentParser):
    parser.add_argument('-v', '--verbose', action='store_true', help='Enable verbose output')


def add_rewrite_options(parser: argparse.ArgumentParser):
    parser.add_argument('--k', type=parse_k, default=DEFAULT_K,
                        help=f"Existential levels per iteration, a number or 'inf' "
                             f"(default: {DEFAULT_K})")
    parser.add_argument('--max-iterations', type=int, default=DEFAULT_MAX_ITERATIONS,
                        help=f'Outer loop budget (default: {DEFAULT_MAX_ITERATIONS})')
    parser.add_argument('--timeout-secs', type=float, default=None,
                        help='Wall-clock budget in seconds')
    parser.add_argument('--no-prune', action='store_true',
                        help='Keep subsumed queries (only variants are dropped)')
    parser.add_argument('--jobs', type=int, default=1,
                        help='Worker threads per rewriting level (default: 1)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Rewrite queries with negation under disjunctive existential rules',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Commands:
  rewrite   Compute a UCQ-rewriting of --query under the rules of --kb
  classify  Report rule fragments and whether rewriting is guaranteed to stop
  oracle    Check entailment with a bounded chase (prints true or unknown)
  batch     Rewrite every query of a .dlgp file or folder into REWRITINGS/

Exit codes:
  0  converged (complete rewriting)
  1  budget exhausted (partial, sound rewriting printed)
  2  parse or validation error
  3  timeout before the first iteration completed

Examples:
  %(prog)s rewrite --kb samples/diabetes.dlgp
  %(prog)s rewrite --kb samples/diabetes.dlgp --query diabetic --format json --stats
  %(prog)s classify --kb samples/ancestors.dlgp
  %(prog)s oracle --kb samples/diabetes.dlgp --facts samples/diabetes_facts.dlgp
  %(prog)s batch --kb kb.dlgp --queries ./queries -r
        """
    )
    commands = parser.add_subparsers(dest='command', required=True)

    rewrite = commands.add_parser('rewrite', help='Compute a UCQ-rewriting')
    rewrite.add_argument('--kb', required=True, help='Knowledge base (.dlgp)')
    rewrite.add_argument('--query', help='Query file (.dlgp) or label of a query in the kb')
    add_rewrite_options(rewrite)
    rewrite.add_argument('--format', choices=('dlgp', 'json'), default='dlgp',
                         help='Output format (default: dlgp)')
    rewrite.add_argument('--stats', action='store_true', help='Print run statistics to stderr')
    rewrite.add_argument('--stats-out', help='Write run statistics JSON to this file')
    add_common_options(rewrite)
    rewrite.set_defaults(handler=cmd_rewrite)

    classify = commands.add_parser('classify', help='Classify a rule set')
    classify.add_argument('--kb', required=True, help='Knowledge base (.dlgp)')
    classify.add_argument('--query', help='Include the rules made from these negated queries')
    add_common_options(classify)
    classify.set_defaults(handler=cmd_classify)

    oracle = commands.add_parser('oracle', help='Bounded chase entailment check')
    oracle.add_argument('--kb', required=True, help='Knowledge base (.dlgp)')
    oracle.add_argument('--facts', help='Facts file (default: the facts of the kb)')
    oracle.add_argument('--query', help='Query file (.dlgp) or label of a query in the kb')
    oracle.add_argument('--depth', type=int, default=DEFAULT_DEPTH,
                        help=f'Chase rounds (default: {DEFAULT_DEPTH})')
    add_common_options(oracle)
    oracle.set_defaults(handler=cmd_oracle)

    batch = commands.add_parser('batch', help='Rewrite many queries')
    batch.add_argument('--kb', required=True, help='Knowledge base (.dlgp)')
    batch.add_argument('--queries', required=True, help='Query file or folder of .dlgp files')
    batch.add_argument('-r', '--recursive', action='store_true',
                       help='Recursively process subdirectories')
    batch.add_argument('-o', '--output-dir', help=f'Output folder (default: {OUTPUT_DIR_NAME}/)')
    add_rewrite_options(batch)
    add_common_options(batch)
    batch.set_defaults(handler=cmd_batch)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the rewriter"""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')
    args.seed = name_seed()
    return args.handler(args)


if __name__ == '__main__':
    sys.exit(main())
