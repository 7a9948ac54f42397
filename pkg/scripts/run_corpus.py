#!/usr/bin/env python3
"""Command-line script for running the regression corpus.

Runs every case of a corpus directory through the qcw dispatcher and
writes results.csv and results.json. Equivalent to ``qcw corpus run``.

Usage:
    python scripts/run_corpus.py
    python scripts/run_corpus.py --corpus configs/corpus --output-dir outputs/corpus
    python scripts/run_corpus.py --only gamma18-uncolorable gyni-causal-bound
"""

import argparse
import logging
import sys
from pathlib import Path

# Add parent directory to path to import src modules
sys.path.insert(0, str(Path(__file__).parent.parent))

from scripts.qcw import execute
from src.corpus_runner import run_corpus
from src.data_handler import DataHandler
from src.exceptions import EXIT_INTERNAL, EXIT_NEGATIVE, EXIT_OK, QcwError
from src.utils import format_duration, setup_logging


def parse_arguments():
    """Parse command-line arguments.

    Returns:
        Namespace with parsed arguments.
    """
    parser = argparse.ArgumentParser(
        description="Run the qcw regression corpus",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Run the shipped corpus
  python scripts/run_corpus.py

  # Run two cases with a stricter configuration
  python scripts/run_corpus.py --config configs/strict.yaml --only gamma18-uncolorable pm-audit
        """,
    )

    parser.add_argument(
        "--corpus",
        type=str,
        default="configs/corpus",
        help="Corpus directory of YAML case files (default: configs/corpus)",
    )

    parser.add_argument(
        "--output-dir",
        "-o",
        type=str,
        default="outputs/corpus",
        help="Output directory for results tables (default: outputs/corpus)",
    )

    parser.add_argument(
        "--config",
        "-c",
        type=str,
        default=None,
        help="Configuration YAML passed to every case",
    )

    parser.add_argument(
        "--only",
        type=str,
        nargs="*",
        default=None,
        help="Run only these case ids",
    )

    parser.add_argument(
        "--verbose",
        "-v",
        action="store_true",
        help="Enable verbose (DEBUG) logging",
    )

    parser.add_argument(
        "--log-file",
        type=str,
        default=None,
        help="Log file path (default: console only)",
    )

    return parser.parse_args()


def main():
    """Main execution function."""
    args = parse_arguments()

    setup_logging(level="DEBUG" if args.verbose else "INFO", log_file=args.log_file)
    logger = logging.getLogger(__name__)

    logger.info("=" * 60)
    logger.info("QCW REGRESSION CORPUS")
    logger.info("=" * 60)
    logger.info(f"Corpus directory: {args.corpus}")
    logger.info(f"Output directory: {args.output_dir}")

    try:
        summary = run_corpus(args.corpus, execute, args.output_dir, args.config, args.only)
    except QcwError as e:
        logger.error(f"{type(e).__name__}: {e.message}")
        return e.exit_code
    except Exception as e:
        logger.error(f"Corpus run failed: {e}", exc_info=True)
        return EXIT_INTERNAL

    total = sum(r.wall_time_s for r in summary.results)
    logger.info("\n--- RESULTS ---")
    for result in summary.results:
        status = "PASS" if result.passed else "FAIL"
        logger.info(f"  [{status}] {result.id:40s} {format_duration(result.wall_time_s)}")
        if not result.passed:
            logger.info(f"         {result.message}")
    logger.info(f"{summary.n_passed}/{len(summary.results)} cases passed in {format_duration(total)}")

    DataHandler.write_report(summary.to_dict())
    return EXIT_OK if summary.all_passed else EXIT_NEGATIVE


if __name__ == "__main__":
    sys.exit(main())
