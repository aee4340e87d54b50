from __future__ import annotations

import argparse
import copy
import sys
from collections import namedtuple

__all__ = [
    "Argument",
    "CommandParser",
    "CommandRouter",
    "Route",
]

EXIT_INPUT = 1

Argument = namedtuple("Argument", ["flags", "options"])
Route = namedtuple("Route", ["name", "handler", "help", "arguments", "defaults"])


def _arg(*flags, **options):
    return Argument(flags, options)


GRAPH = _arg("--graph", required=True, help="graph file")
QUERY = _arg("--query", required=True, help="query JSON file")
PROXIMAL = _arg("--proximal", action="store_true", help="use the proximal engine")


class CommandParser(argparse.ArgumentParser):
    """
    Usage errors exit with the input-error code so that code 2 stays
    reserved for non-identification.
    """

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


class CommandRouter(object):
    """
    Map subcommands to handler functions looked up by name on ``handlers``.
    """

    routes = [
        Route(
            name="identify",
            handler="cmd_identify",
            help="compile a query into an estimand",
            arguments=(
                GRAPH,
                QUERY,
                PROXIMAL,
                _arg("--out", help="write the estimand JSON here instead of stdout"),
                _arg("--latex", action="store_true", help="render LaTeX instead of text"),
                _arg("--raw", action="store_true", help="skip simplification"),
            ),
            defaults={},
        ),
        Route(
            name="verify",
            handler="cmd_verify",
            help="check an estimand against random discrete SCMs",
            arguments=(
                GRAPH,
                QUERY,
                PROXIMAL,
                _arg("--trials", type=int, default=100),
                _arg("--seed", type=int, default=None, help="defaults to $PROXID_SEED or 0"),
                _arg("--tolerance", type=float, default=None),
                _arg("--floor", type=float, default=0.05, help="minimum CPT entry"),
                _arg("--card", action="append", default=[], metavar="NAME=K"),
                _arg("--sever", action="append", default=[], metavar="PARENT,CHILD"),
                _arg("--replay", help="write the first failing SCM here"),
            ),
            defaults={},
        ),
        Route(
            name="simulate",
            handler="cmd_simulate",
            help="run a simulation experiment",
            arguments=(
                _arg("--config", required=True, help="key=value experiment file"),
                _arg("--out", required=True, help="output directory"),
                _arg("--jobs", type=int, default=1, help="worker processes"),
            ),
            defaults={},
        ),
        Route(
            name="report",
            handler="cmd_report",
            help="render the table of a finished experiment",
            arguments=(_arg("--results", required=True, help="experiment output directory"),),
            defaults={},
        ),
    ]
    # ``pid`` is ``identify --proximal``
    routes.insert(
        1,
        copy.deepcopy(routes[0])._replace(
            name="pid", help="identify with the proximal engine", defaults={"proximal": True}
        ),
    )

    def __init__(self, handlers, prog="proxid"):
        self.handlers = handlers
        self.prog = prog

    def get_parser(self):
        parser = CommandParser(prog=self.prog, description="Causal identification with proxies.")
        parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
        commands = parser.add_subparsers(dest="command", required=True, parser_class=CommandParser)
        for route in self.routes:
            sub = commands.add_parser(route.name, help=route.help)
            for argument in route.arguments:
                sub.add_argument(*argument.flags, **argument.options)
            sub.set_defaults(handler=route.handler, **route.defaults)
        return parser

    def dispatch(self, argv=None):
        args = self.get_parser().parse_args(argv)
        return args, getattr(self.handlers, args.handler)
