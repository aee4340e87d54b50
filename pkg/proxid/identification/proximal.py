"""
Proximal identification: fixing sequences in which a vertex that cannot be
fixed may instead be removed by a proximal step, resolving its hidden
confounders through a pair of proxy sets and a bridge function.

The search threads two kernels through the sequence. The inductive margin
is the working distribution over the remaining vertices ``V`` and unused
proxies ``M2``; the reusing margin over ``V1`` and ``M1`` keeps proxies
around after the inductive margin has consumed them. A full CADMG that
keeps the resolvable hidden vertices decides every graphical condition.
"""
from __future__ import annotations

import enum
import itertools
import logging
import math
from dataclasses import dataclass, field

from .. import settings
from ..estimands.nodes import (
    BridgeApply,
    BridgeExistence,
    BridgeSolve,
    Completeness,
    CounterfactualIndependence,
    Density,
    Estimand,
    KernelRef,
    KernelTag,
    Product,
    Sum,
)
from ..exceptions import GraphError, NotFixableError, QueryError
from ..models import Identified, NotIdentified, VertexKind
from .classic import ancestral_set
from .fixing import assemble, emit_fix, emit_marginal, plug_district

__all__ = [
    "AdmissibleSequence",
    "Margins",
    "ProximalCheck",
    "ProximalStep",
    "SearchLimits",
    "StepKind",
    "check_proximal_step",
    "completeness_screen",
    "ordinary_fix_margins",
    "proximal_fix",
    "proximal_identify",
    "search_admissible_sequence",
]

logger = logging.getLogger(__name__)

INDUCTIVE = "inductive"
REUSING = "reusing"


def _fmt(vertices):
    return "{" + ",".join(sorted(vertices)) + "}"


def _lower(vertices):
    return ",".join(v.lower() for v in vertices)


class StepKind(enum.Enum):
    ORDINARY = "ordinary"
    PROXIMAL = "proximal"
    DISCARD = "discard"


@dataclass(frozen=True)
class Margins:
    inductive: KernelRef
    v: frozenset
    m2: frozenset
    reusing: KernelRef | None
    v1: frozenset
    m1: frozenset

    @classmethod
    def initial(cls, vertices, proxies):
        joint = KernelRef.observed(set(vertices) | set(proxies))
        vertices, proxies = frozenset(vertices), frozenset(proxies)
        return cls(joint, vertices, proxies, joint, vertices, proxies)

    @property
    def key(self):
        return (self.v, self.m2, self.reusing is None, self.v1, self.m1)

    def describe(self):
        scope, do = ",".join(self.inductive.scope), ",".join(self.inductive.do)
        inductive = f"inductive=({scope}|do({do}))"
        if self.reusing is None:
            return f"{inductive} reusing=()"
        return (
            f"{inductive} reusing=({','.join(self.reusing.scope)}"
            f"|do({','.join(self.reusing.do)}))"
        )


@dataclass(frozen=True)
class ProximalStep:
    target: str
    kind: StepKind
    proxies: tuple = ()
    controls: tuple = ()
    hidden: tuple = ()
    r: tuple = ()
    t: tuple = ()
    source: str = INDUCTIVE
    margins: Margins | None = field(default=None, compare=False, repr=False)

    def describe(self):
        text = f"{self.kind.value} {self.target}"
        if self.kind is StepKind.PROXIMAL:
            text += (
                f"  M*={_fmt(self.proxies)} Z={_fmt(self.controls)} U*={_fmt(self.hidden)}"
                f" R={_fmt(self.r)} T={_fmt(self.t)} source={self.source}"
            )
        if self.margins is not None:
            text += f"  {self.margins.describe()}"
        return text


@dataclass(frozen=True)
class AdmissibleSequence:
    district: frozenset
    steps: tuple
    margins: Margins
    ledger: tuple = ()

    @property
    def targets(self):
        return tuple(s.target for s in self.steps if s.kind is not StepKind.DISCARD)

    def describe(self):
        return [step.describe() for step in self.steps]


@dataclass(frozen=True)
class ProximalCheck:
    target: str
    proxies: tuple
    controls: tuple
    hidden: tuple
    passed: bool
    reason: str = ""
    r: tuple = ()
    t: tuple = ()
    descendant_controls: tuple = ()
    source: str = INDUCTIVE
    records: tuple = ()

    def __bool__(self):
        return self.passed

    @property
    def outcomes(self):
        return tuple(v for v in self.r if v not in self.descendant_controls)

    @property
    def conditioning(self):
        return tuple(sorted({self.target} | set(self.t) | set(self.descendant_controls)))

    def step(self, margins=None):
        return ProximalStep(
            target=self.target,
            kind=StepKind.PROXIMAL,
            proxies=self.proxies,
            controls=self.controls,
            hidden=self.hidden,
            r=self.r,
            t=self.t,
            source=self.source,
            margins=margins,
        )


@dataclass(frozen=True)
class SearchLimits:
    max_proxies: int = settings.MAX_PROXY_SIZE
    max_controls: int = settings.MAX_CONTROL_SIZE
    max_hidden: int = settings.MAX_HIDDEN_SIZE


def _subsets(pool, limit):
    pool = sorted(pool)
    for size in range(1, min(limit, len(pool)) + 1):
        yield from (frozenset(c) for c in itertools.combinations(pool, size))


def completeness_screen(graph, proxies, controls, hidden):
    """
    Whether the proxies and the controls each have at least as many joint
    categories as the hidden set.
    """

    def size(vertices):
        return math.prod(graph.cardinality(v, settings.DEFAULT_CARDINALITY) for v in vertices)

    need = size(hidden)
    return size(proxies) >= need and size(controls) >= need


# ############################################### #
# Single steps: checking and emitting ordinary and #
# proximal fixings against the current margins.    #
# ############################################### #


def _fail(target, proxies, controls, hidden, reason, **kwargs):
    return ProximalCheck(
        target, tuple(sorted(proxies)), tuple(sorted(controls)), tuple(sorted(hidden)),
        passed=False, reason=reason, **kwargs,
    )


def _downstream(graph, margins, target, proxies):
    """
    ``R`` and ``T`` of a proximal step: the proper descendants of the target
    once ``proxies`` are marginalized, and everything else left over.
    """
    projected = graph.project_onto(margins.v | (margins.m2 - proxies))
    r = projected.descendants(target) - {target}
    t = (margins.v | margins.m2) - r - proxies - {target}
    return projected, frozenset(r), frozenset(t)


def check_proximal_step(
    graph, target, proxies, controls, hidden, margins, consumed=(), district=()
):
    """
    Decide the graphical conditions of a proximal step on ``target``.

    Returns a ``ProximalCheck`` whose ``records`` hold the counterfactual
    independences that were verified by m-separation in the split graph.
    Bridge existence and completeness are never decided here.
    """
    proxies, controls, hidden = frozenset(proxies), frozenset(controls), frozenset(hidden)
    consumed, district = frozenset(consumed), frozenset(district)
    roles = [({target}, "target"), (proxies, "M*"), (controls, "Z"), (hidden, "U*")]
    for (left, a), (right, b) in itertools.combinations(roles, 2):
        if left & right:
            raise GraphError(f"{a} and {b} overlap at {sorted(left & right)}")
    if not proxies:
        raise GraphError("a proximal step needs at least one proxy (the bridge unknowns)")
    if target not in margins.v:
        raise GraphError(f"target {target!r} is not a remaining vertex of the inductive margin")
    for v in controls:
        if graph.kind(v) is not VertexKind.OBSERVED:
            raise GraphError(f"control {v!r} is {graph.kind(v).value}, not observed")
    for v in hidden:
        if graph.kind(v) is not VertexKind.RESOLVABLE and v not in consumed:
            raise GraphError(f"{v!r} is neither a resolvable hidden vertex nor a consumed proxy")
    args = (target, proxies, controls, hidden)

    if proxies <= margins.m2:
        source = INDUCTIVE
    elif margins.reusing is not None and proxies <= margins.m1:
        source = REUSING
    else:
        return _fail(*args, "m-condition: proxies are in neither margin")

    projected, r, t = _downstream(graph, margins, target, proxies)
    if source == REUSING and not ({target} | t) <= (margins.v1 | margins.m1):
        return _fail(*args, "m-condition: target and T are not all in the reusing margin",
                     r=tuple(sorted(r)), t=tuple(sorted(t)), source=source)
    if not controls <= r | t:
        return _fail(*args, f"controls {sorted(controls - r - t)} are not in the inductive margin")
    late = controls & r
    for v in sorted(late):
        if v in district or v not in margins.v | margins.m2 or projected.children(v):
            return _fail(*args, f"descendant control {v!r} cannot be marginalized")
    if source == REUSING and not late <= margins.v1 | margins.m1:
        return _fail(*args, "m-condition: descendant controls are not in the reusing margin")
    outcomes = r - late
    if not outcomes:
        return _fail(*args, "nothing downstream of the target")
    rest = t - controls

    resolved = graph.project_onto(margins.v | (margins.m2 - proxies) | hidden)
    if not resolved.fixable(target):
        return _fail(*args, f"{target} is not fixable given {_fmt(hidden)}")

    split = graph.split_intervene({target})
    statements = (
        (
            "outcome-pre-proxy",
            outcomes, controls, hidden | rest,
        ),
        (
            "treatment-post-proxy",
            proxies, controls | {target}, hidden | rest,
        ),
        (
            "fix-ignore",
            outcomes, frozenset({target}), t | hidden,
        ),
    )
    records = []
    for name, x, y, z in statements:
        if not split.m_separated(x, y, z):
            return _fail(
                *args, f"{name} independence fails", r=tuple(sorted(r)), t=tuple(sorted(t))
            )
        records.append(
            CounterfactualIndependence(
                f"{name}: {_fmt(x)}({target.lower()}) ⫫ {_fmt(y)}({target.lower()}) | {_fmt(z)}",
                checked_graphically=True,
            )
        )
    return ProximalCheck(
        target,
        tuple(sorted(proxies)),
        tuple(sorted(controls)),
        tuple(sorted(hidden)),
        passed=True,
        r=tuple(sorted(r)),
        t=tuple(sorted(t)),
        descendant_controls=tuple(sorted(late)),
        source=source,
        records=tuple(records),
    )


def _update_reusing(margins, graph, vertex):
    """
    Carry the reusing margin past the fixing of ``vertex``: fix it there if
    it is fixable, otherwise marginalize its descendants.
    """
    if margins.reusing is None:
        return margins
    scope = margins.v1 | margins.m1
    if vertex in margins.v1:
        reusing_graph = graph.project_onto(scope)
        if reusing_graph.fixable(vertex):
            kernel = emit_fix(margins.reusing, reusing_graph, vertex, tag=KernelTag.REUSING)
            return _replace(margins, reusing=kernel, v1=margins.v1 - {vertex})
    drop = graph.descendants(vertex) & scope
    kernel = emit_marginal(margins.reusing, drop, do={vertex}, tag=KernelTag.REUSING)
    if kernel is None:
        return _replace(margins, reusing=None, v1=frozenset(), m1=frozenset())
    return _replace(margins, reusing=kernel, v1=margins.v1 - drop, m1=margins.m1 - drop)


def _replace(margins, **changes):
    values = {
        "inductive": margins.inductive,
        "v": margins.v,
        "m2": margins.m2,
        "reusing": margins.reusing,
        "v1": margins.v1,
        "m1": margins.m1,
    }
    values.update(changes)
    return Margins(**values)


def ordinary_fix_margins(margins, vertex, graph):
    """
    Fix ``vertex`` in the inductive margin and carry the reusing margin
    along. ``graph`` is the full CADMG before the fixing.
    """
    inductive_graph = graph.project_onto(margins.v | margins.m2)
    if vertex not in margins.v:
        raise NotFixableError(vertex, "not a remaining vertex of the inductive margin")
    if not inductive_graph.fixable(vertex):
        raise NotFixableError(vertex, "descendants share its district in the inductive graph")
    kernel = emit_fix(margins.inductive, inductive_graph, vertex)
    margins = _replace(margins, inductive=kernel, v=margins.v - {vertex})
    return _update_reusing(margins, graph, vertex)


@dataclass(frozen=True)
class ProximalFix:
    margins: Margins
    solve: BridgeSolve
    ledger: tuple
    graph: object


def proximal_fix(margins, check, graph, bridge_id="b1"):
    """
    Emit the bridge equation of a passed ``check`` and the new inductive
    margin ``Σ_{m*} b · p(m*, t)`` under ``do(w, a)``.
    """
    if not isinstance(check, ProximalCheck) or not check.passed:
        raise GraphError("proximal_fix needs a passed check_proximal_step result")
    kernel = margins.inductive
    source = kernel if check.source == INDUCTIVE else margins.reusing
    target, proxies = check.target, check.proxies
    late = set(check.descendant_controls)
    condition = check.conditioning
    outcomes = check.outcomes
    early = set(check.controls) - late
    signature = (
        tuple(proxies)
        + tuple(outcomes)
        + (target,)
        + tuple(v for v in check.t if v not in early)
        + tuple(kernel.do)
    )
    lhs = Density(outcomes, condition, kernel)
    rhs = Density(proxies, condition, source)
    solve = BridgeSolve(bridge_id, signature, lhs, rhs, check.controls)
    weight = Density(tuple(proxies) + tuple(check.t), (), source)
    definition = Sum(proxies, Product((BridgeApply(solve), weight)))
    scope = tuple(outcomes) + tuple(check.t)
    new_kernel = KernelRef(
        KernelTag.INDUCTIVE,
        scope,
        tuple(kernel.do) + (target,) + tuple(sorted(late)),
        definition,
    )

    equation = (
        f"p({_lower(outcomes)}|{_lower(condition)}; {INDUCTIVE}) = "
        f"Σ_{{{_lower(proxies)}}} {bridge_id}({_lower(signature)}) "
        f"p({_lower(proxies)}|{_lower(condition)}; {check.source})"
    )
    ledger = (
        BridgeExistence(bridge_id, equation),
        Completeness(bridge_id, condition, check.hidden),
    ) + check.records

    updated = _replace(
        margins,
        inductive=new_kernel,
        v=margins.v - {target} - late,
        m2=margins.m2 - set(proxies) - late,
    )
    updated = _update_reusing(updated, graph, target)
    graph = graph.intervene(target)
    for v in sorted(late):
        updated = _update_reusing(updated, graph, v)
        graph = graph.intervene(v)
    return ProximalFix(updated, solve, ledger, graph)


def discard_proxy(margins, proxy):
    kernel = emit_marginal(margins.inductive, {proxy})
    return _replace(margins, inductive=kernel, m2=margins.m2 - {proxy})


# ############################################### #
# Depth-first search over admissible sequences.    #
# ############################################### #


@dataclass(frozen=True)
class _State:
    graph: object
    margins: Margins
    consumed: frozenset = frozenset()
    steps: tuple = ()
    ledger: tuple = ()
    bridges: int = 0

    @property
    def key(self):
        return self.margins.key + (self.consumed, self.graph.fixed)


class _Search(object):
    def __init__(self, district, limits, first_bridge):
        self.district = frozenset(district)
        self.limits = limits
        self.first_bridge = first_bridge
        self.failed = set()
        self.stuck = None

    def run(self, state):
        if state.margins.v == self.district:
            return state
        if state.key in self.failed:
            return None
        for child in self.children(state):
            found = self.run(child)
            if found is not None:
                return found
        self.failed.add(state.key)
        remaining = state.margins.v - self.district
        if self.stuck is None or len(remaining) < len(self.stuck):
            self.stuck = remaining
        return None

    def children(self, state):
        graph, margins = state.graph, state.margins
        targets = sorted(margins.v - self.district)
        inductive_graph = graph.project_onto(margins.v | margins.m2)
        for vertex in targets:
            if inductive_graph.fixable(vertex):
                updated = ordinary_fix_margins(margins, vertex, graph)
                step = ProximalStep(vertex, StepKind.ORDINARY, margins=updated)
                yield _State(
                    graph.intervene(vertex),
                    updated,
                    state.consumed,
                    state.steps + (step,),
                    state.ledger,
                    state.bridges,
                )
        screened, unscreened = [], []
        for vertex in targets:
            for proxies in self.proxy_sets(margins):
                first, fallback = self.first_passing(state, vertex, proxies)
                if first is not None:
                    screened.append(first)
                elif fallback is not None:
                    unscreened.append(fallback)
        for check in screened + unscreened:
            bridge_id = f"b{self.first_bridge + state.bridges + 1}"
            fixed = proximal_fix(margins, check, graph, bridge_id)
            yield _State(
                fixed.graph,
                fixed.margins,
                state.consumed | set(check.proxies),
                state.steps + (check.step(fixed.margins),),
                state.ledger + fixed.ledger,
                state.bridges + 1,
            )
        for proxy in sorted(margins.m2):
            updated = discard_proxy(margins, proxy)
            step = ProximalStep(proxy, StepKind.DISCARD, margins=updated)
            yield _State(
                graph, updated, state.consumed, state.steps + (step,), state.ledger, state.bridges
            )

    def proxy_sets(self, margins):
        yield from _subsets(margins.m2, self.limits.max_proxies)
        if margins.reusing is not None:
            for proxies in _subsets(margins.m1, self.limits.max_proxies):
                if not proxies <= margins.m2:
                    yield proxies

    def first_passing(self, state, vertex, proxies):
        """
        The first passing (U*, Z) for this target and proxy set that meets
        the completeness screen, else the first passing one that does not.
        """
        graph, margins = state.graph, state.margins
        _, r, t = _downstream(graph, margins, vertex, proxies)
        pool_hidden = (graph.resolvable | state.consumed) - proxies
        pool_controls = t | {v for v in r - self.district if v in margins.v | margins.m2}
        fallback = None
        for hidden in _subsets(pool_hidden, self.limits.max_hidden):
            for controls in _subsets(pool_controls, self.limits.max_controls):
                check = check_proximal_step(
                    graph, vertex, proxies, controls, hidden, margins,
                    consumed=state.consumed, district=self.district,
                )
                if not check.passed:
                    continue
                if completeness_screen(graph, proxies, controls, hidden):
                    return check, None
                if fallback is None:
                    fallback = check
        return None, fallback


def search_admissible_sequence(
    graph, district, proxies=(), margins=None, limits=None, first_bridge=0, consumed=()
):
    """
    Depth-first search for an admissible sequence removing every vertex of
    the inductive margin outside ``district``.

    Per state the options are tried as: ordinary fixings by name, proximal
    steps that pass the completeness screen, the remaining proximal steps,
    then discarding an unused proxy. Returns an ``AdmissibleSequence`` or a
    ``NotIdentified`` carrying the smallest stuck set seen.
    """
    graph = graph.as_cadmg()
    district = frozenset(district)
    if margins is None:
        vertices = graph.observed - set(proxies)
        margins = Margins.initial(vertices, proxies)
    search = _Search(district, limits or SearchLimits(), first_bridge)
    found = search.run(_State(graph, margins, frozenset(consumed)))
    if found is None:
        stuck = search.stuck if search.stuck is not None else margins.v - district
        return NotIdentified(district, frozenset(stuck))
    return AdmissibleSequence(district, found.steps, found.margins, found.ledger)


def proximal_identify(graph, query, limits=None):
    """
    Identify ``p(Y(a))`` with proxies ``M``: factorize over the districts of
    ``Y*`` in the graph over ``V \\ M`` and search an admissible sequence for
    each. Without proxies and resolvable hidden vertices this emits the same
    estimand as ``identify``.
    """
    query.validate(graph)
    if query.policies:
        raise QueryError("policy queries go through reduce_policy_query first")
    proxies = frozenset(query.proxies)
    vertices = graph.observed - proxies
    full = graph.latent_project(graph.unresolvable).as_cadmg()
    reduced = full.project_onto(vertices)
    outcomes, treatments = set(query.outcomes), query.treatment_set
    ystar = ancestral_set(reduced, outcomes, treatments)
    trace = [f"Y* = {_fmt(ystar)}", f"proxies M = {_fmt(proxies)}"]

    terms, ledger, bridges = [], [], 0
    for district in reduced.subgraph(ystar).districts():
        result = search_admissible_sequence(
            full,
            district,
            proxies,
            margins=Margins.initial(vertices, proxies),
            limits=limits,
            first_bridge=bridges,
        )
        if isinstance(result, NotIdentified):
            trace.append(f"district {_fmt(district)}: stuck at {_fmt(result.stuck)}")
            logger.info("district %s has no admissible sequence", sorted(district))
            return NotIdentified(district, result.stuck, tuple(trace))
        trace.append(f"district {_fmt(district)}:")
        trace.extend(f"  {line}" for line in result.describe())
        bridges += sum(1 for s in result.steps if s.kind is StepKind.PROXIMAL)
        ledger.extend(result.ledger)
        terms.append(
            plug_district(result.margins.inductive, district, query.treatments, ystar)
        )

    root = assemble(terms, sorted(ystar - outcomes))
    return Identified(Estimand(root, tuple(ledger)), tuple(trace))
