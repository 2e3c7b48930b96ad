"""Entry point for the ciscurv command line."""

import json
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict, List, Optional

from ciscurv.command_handlers import HANDLERS
from ciscurv.config import RunConfig, parse_args
from ciscurv.errors import CiscurvError, InputParseError
from ciscurv.report_writer import ReportWriter

LOGGER_NAME = "ciscurv"


def setup_logging(log_file: Optional[Path] = None, level: int = logging.INFO) -> logging.Logger:
    """Setup logging configuration.

    Args:
        log_file: Optional path to a rotating log file.
        level: Level of the console handler.

    Returns:
        Configured logger instance.
    """
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(logging.DEBUG)

    # Repeated calls (tests, embedding) must not stack handlers
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    # Create formatters
    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    # Console handler; stdout carries the report
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    # File handler with rotation
    if log_file is not None:
        log_file = Path(log_file)
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=10_000_000,  # 10 MB
            backupCount=5,
        )
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


def error_object(error: BaseException) -> Dict[str, Any]:
    """Machine-readable error written to stderr."""
    body: Dict[str, Any] = {"type": type(error).__name__, "message": str(error)}
    if isinstance(error, InputParseError):
        body["location"] = error.location
    elif isinstance(error, FileNotFoundError) and error.filename:
        body["location"] = {"path": str(error.filename)}
    return {"error": body}


def dispatch(argv: Optional[List[str]] = None) -> int:
    """Parse argv, run the subcommand and emit its report.

    Args:
        argv: Arguments without the program name; None reads sys.argv.

    Returns:
        Exit code: 0 on success, 2 on invalid input, 1 on unexpected failure.
    """
    args = parse_args(argv)
    logger = logging.getLogger(LOGGER_NAME)
    try:
        config = RunConfig.from_args(args)
        config.validate()

        level = logging.DEBUG if getattr(args, "verbose", False) else logging.INFO
        logger = setup_logging(config.log_file, level)
        logger.info(f"Running {args.command} (seed={config.seed}, threads={config.threads})")

        output = HANDLERS[args.command](args, config)
        writer = ReportWriter(config.output)
        text = writer.write_report(args.command, config.to_dict(), output.result)
        if output.text is not None:
            sys.stdout.write(output.text)
        elif config.output is None:
            sys.stdout.write(text)
        return 0

    except (CiscurvError, FileNotFoundError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(json.dumps(error_object(e), sort_keys=True), file=sys.stderr)
        return 2


def main() -> int:
    """Main entry point.

    Returns:
        Exit code (0 for success, 2 for invalid input, 1 for error).
    """
    try:
        return dispatch()
    except KeyboardInterrupt:
        print("\nInterrupted by user", file=sys.stderr)
        return 1
    except Exception as e:
        print(f"Fatal error: {e}", file=sys.stderr)
        logging.getLogger(LOGGER_NAME).error(f"Fatal error: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
