"""
The ``proxid`` command line.

Exit codes: 0 success, 1 input error, 2 not identified, 3 verification
failure.
"""
from __future__ import annotations

import logging
import sys
from pathlib import Path

from . import settings
from .estimands import Estimand, render_latex, render_text, simplify
from .exceptions import ConfigError, ProxidError, QueryError
from .identification import identify, proximal_identify, reduce_policy_query
from .models import Identified
from .parsers import load_graph
from .routes import CommandRouter
from .serializers import EstimandSerializer, QuerySerializer, ScmSerializer

__all__ = [
    "EXIT_FAILED",
    "EXIT_INPUT",
    "EXIT_NOT_IDENTIFIED",
    "EXIT_OK",
    "cmd_identify",
    "cmd_report",
    "cmd_simulate",
    "cmd_verify",
    "main",
]

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_INPUT, EXIT_NOT_IDENTIFIED, EXIT_FAILED = range(4)


def _identify(graph, query, proximal):
    joint, recipe = reduce_policy_query(graph, query)
    result = (proximal_identify if proximal else identify)(graph, joint)
    if recipe is None or not result.identified:
        return result
    root = recipe.wrap(result.estimand.root)
    return Identified(Estimand(root, result.estimand.ledger), result.trace)


def _load(args):
    graph = load_graph(args.graph)
    query = QuerySerializer().load(args.query)
    return graph, query


def cmd_identify(args, out=sys.stdout):
    graph, query = _load(args)
    result = _identify(graph, query, args.proximal)
    for line in result.trace:
        print(f"# {line}", file=out)
    if not result.identified:
        print(result.describe(), file=out)
        return EXIT_NOT_IDENTIFIED
    estimand = result.estimand if args.raw else simplify(result.estimand)
    print((render_latex if args.latex else render_text)(estimand), file=out)
    if args.out:
        EstimandSerializer().dump(estimand, args.out)
        logger.info("wrote %s", args.out)
    else:
        print(EstimandSerializer().dumps(estimand), end="", file=out)
    return EXIT_OK


def _cards(values):
    cards = {}
    for item in values:
        name, sep, value = item.partition("=")
        try:
            cards[name.strip()] = int(value)
        except ValueError:
            sep = ""
        if not sep or not name.strip():
            raise ConfigError(f"--card expects NAME=K, got {item!r}")
    return cards


def _severed(values):
    edges = []
    for item in values:
        parts = [p.strip() for p in item.split(",")]
        if len(parts) != 2 or not all(parts):
            raise ConfigError(f"--sever expects PARENT,CHILD, got {item!r}")
        edges.append(tuple(parts))
    return edges


def cmd_verify(args, out=sys.stdout):
    from .oracle.verify import verify_trials

    graph, query = _load(args)
    if query.policies:
        raise QueryError("verify compares ordinary interventions; drop the policies")
    result = _identify(graph, query, args.proximal)
    if not result.identified:
        print(result.describe(), file=out)
        return EXIT_NOT_IDENTIFIED
    options = {}
    if args.tolerance is not None:
        options["tolerance"] = args.tolerance
    report = verify_trials(
        graph,
        query,
        result.estimand,
        trials=args.trials,
        seed=args.seed if args.seed is not None else settings.master_seed(0),
        cards=_cards(args.card),
        floor=args.floor,
        severed=_severed(args.sever),
        **options,
    )
    print(report.summary(), file=out)
    if report.ok:
        return EXIT_OK
    if report.failure is not None:
        if args.replay:
            ScmSerializer().dump(report.failure, args.replay)
            print(f"failing SCM written to {args.replay}", file=out)
        else:
            print(ScmSerializer().dumps(report.failure), end="", file=out)
    return EXIT_FAILED


def cmd_simulate(args, out=sys.stdout):
    from .simulation import load_config, render_table, run_experiment, write_results

    if args.jobs < 1:
        raise ConfigError(f"--jobs must be at least 1, got {args.jobs}")
    config = load_config(args.config)
    report = run_experiment(config, jobs=args.jobs)
    paths = write_results(report, args.out)
    print(render_table(report.to_frame(), title=config.name), end="", file=out)
    for path in paths:
        logger.info("wrote %s", path)
    return EXIT_OK


def cmd_report(args, out=sys.stdout):
    import json

    from .simulation import read_results, render_table

    directory = Path(args.results)
    results = directory / "results.csv"
    if not results.exists():
        raise ConfigError(f"{directory} has no results.csv")
    title = None
    summary = directory / "report.json"
    if summary.exists():
        title = json.loads(summary.read_text(encoding="utf-8")).get("config", {}).get("name")
    print(render_table(read_results(results), title=title), end="", file=out)
    return EXIT_OK


def main(argv=None):
    args, handler = CommandRouter(sys.modules[__name__]).dispatch(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return handler(args, out=sys.stdout)
    except (ProxidError, OSError) as e:
        logger.debug("command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
