import argparse
import json
import logging
import os
import sys

from dotenv import load_dotenv

import commands.estimate as estimate
import commands.reform as reform
import commands.simulate as simulate
import commands.solve as solve
import commands.sweep as sweep
from utils.config import load_config
from utils.errors import ConfigError, SegmarketError

# Load environment variables
load_dotenv()

logger = logging.getLogger("segmarket")

COMMANDS = {
    "solve": solve,
    "sweep": sweep,
    "reform": reform,
    "simulate": simulate,
    "estimate": estimate,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="segmarket",
        description="Segmented labor market: equilibrium, reform counterfactuals and synthetic survey estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "solve": "solve one economy and write its equilibrium report",
        "sweep": "solve a firing-cost grid and check the comparative-statics claims",
        "reform": "reform effects, simulated survey, estimates and sign checks end to end",
        "simulate": "simulate the treated and control survey panel",
        "estimate": "estimate treatment effects on a panel file",
    }
    for name, text in helps.items():
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", help="scenario TOML file (defaults when omitted)")
        cmd.add_argument("--seed", type=int, help="override [microsim] seed")
        cmd.add_argument("--out", help="override [output] directory")
        cmd.add_argument("--threads", type=int, help="worker threads (env SEGMARKET_THREADS, default 1)")
        cmd.add_argument("--log-level", help="logging level (env SEGMARKET_LOG_LEVEL, default INFO)")
        if name == "estimate":
            cmd.add_argument("--panel", help="panel file to estimate on")
    return parser


def _threads(value):
    if value is None:
        value = os.getenv("SEGMARKET_THREADS", "1")
    try:
        threads = int(value)
    except ValueError:
        raise ConfigError(f"threads must be an integer, got {value!r}")
    if threads < 1:
        raise ConfigError("threads must be at least 1")
    return threads


def _report(error):
    print(json.dumps(error.to_dict(), sort_keys=True, default=str), file=sys.stderr)
    return error.exit_code


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = (args.log_level or os.getenv("SEGMARKET_LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        threads = _threads(args.threads)
        config = load_config(args.config, seed=args.seed, out=args.out)
        kwargs = {"panel_path": args.panel} if args.command == "estimate" else {}
        text = COMMANDS[args.command].run(config, threads=threads, **kwargs)
    except SegmarketError as e:
        logger.error(f"{args.command} failed: {e}")
        return _report(e)
    print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
