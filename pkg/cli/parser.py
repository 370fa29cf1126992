"""Command-line surface: one subcommand per verifier operation."""

import argparse
import sys

COMMANDS = ("check", "pair", "gram", "svals", "reduce", "verify", "search", "examples")


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors (exit 3), not Inconclusive."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(3, f"{self.prog}: error: {message}\n")


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("numerics")
    group.add_argument("--tolerance", type=float, metavar="ABS", help="absolute tolerance abs_eps")
    group.add_argument("--rel-tolerance", type=float, metavar="REL", help="relative tolerance rel_eps")
    group.add_argument("--psd-tolerance", type=float, metavar="EPS", help="PSD acceptance tolerance psd_eps")
    group.add_argument("--max-iters", type=int, metavar="N", help="correlation completion iterations")

    group = common.add_argument_group("certificate search")
    group.add_argument("--max-p", type=int, metavar="P", help="ancilla bound on A (overrides the problem file)")
    group.add_argument("--max-q", type=int, metavar="Q", help="ancilla bound on B (overrides the problem file)")
    group.add_argument("--seed", type=int, metavar="U64", help="search seed (default 0)")
    group.add_argument("--restarts", type=int, metavar="N", help="search restarts per (p, q)")
    group.add_argument("--max-sweeps", type=int, metavar="N", help="sweeps per restart")

    group = common.add_argument_group("input and output")
    group.add_argument("--normalize", action="store_true", help="rescale unnormalized states instead of failing")
    group.add_argument("--format", choices=("text", "json"), default="text", help="report format")
    group.add_argument("--config", metavar="YAML", help="YAML file with LO_VERIFY_* overrides")
    group.add_argument("--log-level", metavar="LEVEL", help="logging level for progress on stderr")
    return common


def build_parser() -> argparse.ArgumentParser:
    """
    Build the argument parser.

    Returns:
        Parser whose namespace carries ``command`` plus the shared options.
    """
    common = _common_options()
    parser = _Parser(
        prog="lo_verifier",
        description="Decide whether local operations can map bipartite pure states x_i to y_i.",
        epilog="Exit codes: 0 certified/pass, 1 impossible, 2 inconclusive, 3 input error.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("check", parents=[common], help="run the full decision pipeline")
    p.add_argument("problem", help="problem JSON file")
    p.add_argument("--no-search", action="store_true", help="stop after the necessary conditions")

    p = sub.add_parser("pair", parents=[common], help="decide a single pair exactly")
    p.add_argument("problem", help="problem JSON file")
    p.add_argument("--pair-index", type=int, default=1, metavar="I", help="1-based pair to decide (default 1)")

    p = sub.add_parser("gram", parents=[common], help="single-party test treating AB as one system")
    p.add_argument("problem", help="problem JSON file")

    p = sub.add_parser("svals", parents=[common], help="Schmidt coefficients, peeling and majorization per pair")
    p.add_argument("problem", help="problem JSON file")

    p = sub.add_parser("reduce", parents=[common], help="Schmidt reduction and pooled Gram checks")
    p.add_argument("problem", help="problem JSON file")

    p = sub.add_parser("verify", parents=[common], help="verify a unitary certificate")
    p.add_argument("problem", help="problem JSON file")
    p.add_argument("--certificate", required=True, metavar="PATH", help="certificate JSON file")

    p = sub.add_parser("search", parents=[common], help="search for a certificate at fixed (p, q)")
    p.add_argument("problem", help="problem JSON file")
    p.add_argument("-p", type=int, dest="p", metavar="P", help="ancilla dimension on A (default p_max, or the search cap)")
    p.add_argument("-q", type=int, dest="q", metavar="Q", help="ancilla dimension on B (default q_max, or the search cap)")

    p = sub.add_parser("examples", parents=[common], help="run the built-in reproduction fixtures")
    p.add_argument("--list", action="store_true", help="list fixtures and expected outcomes")
    p.add_argument("--group", metavar="NAME", help="run one fixture group only")

    return parser
