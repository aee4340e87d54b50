"""
Shared fixtures: bundled graphs and queries, and random small ADMGs.
"""
from __future__ import annotations

import importlib.resources
import os

import numpy as np

from proxid import settings
from proxid.generics import Admg
from proxid.parsers import parse_graph
from proxid.serializers import QuerySerializer


def asset_path(name):
    return str(importlib.resources.files("proxid").joinpath("assets", name))


def load_asset_graph(name):
    text = importlib.resources.files("proxid").joinpath("assets", f"{name}.graph").read_text()
    return parse_graph(text, source=f"{name}.graph")


def load_asset_query(name):
    return QuerySerializer().load(asset_path(f"{name}.query.json"))


def slow_tests_enabled():
    return os.environ.get(settings.SLOW_TESTS_ENV, "") not in ("", "0")


def random_admg(seed, size=5, directed=0.4, bidirected=0.3):
    """
    An ADMG over ``V0 .. V{size-1}`` whose directed edges respect the index
    order.
    """
    rng = np.random.default_rng(seed)
    names = [f"V{i}" for i in range(size)]
    directed_edges, bidirected_edges = [], []
    for i in range(size):
        for j in range(i + 1, size):
            if rng.random() < directed:
                directed_edges.append((names[i], names[j]))
            if rng.random() < bidirected:
                bidirected_edges.append((names[i], names[j]))
    return Admg({v: "observed" for v in names}, directed_edges, bidirected_edges)
