"""Direct graph encoding of feed-forward neural networks.

A genome is a list of connection genes (origin, terminal, weight,
innovation number, enabled flag) plus a node roster.  Networks are
feed-forward only: the directed graph over enabled genes must stay
acyclic, and activation evaluates nodes in topological order with tanh
at every hidden and output node.  A dedicated bias node emits a
constant 1 and is not counted in the declared input width.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

INPUT = "input"
BIAS = "bias"
OUTPUT = "output"
HIDDEN = "hidden"

# Cost model for the relative-FLOPs measure: one multiply+add per enabled
# edge, a flat charge per tanh evaluation.
EDGE_FLOPS = 2.0
ACTIVATION_FLOPS = 10.0


class InvalidGenomeError(ValueError):
    """Genome violates a structural invariant (cycle, dangling node, ...)."""


class ShapeError(ValueError):
    """Input vector length does not match the genome's input width."""


@dataclass(frozen=True)
class Gene:
    """One directed, weighted edge with its historical marking."""

    innovation: int
    origin: int
    terminal: int
    weight: float
    enabled: bool = True


@dataclass(frozen=True)
class NodeSpec:
    id: int
    role: str


@dataclass
class Genome:
    """A network encoding.  Structure (genes, nodes) is never edited in
    place; variation operators build new genomes.  ``objectives``,
    ``rank`` and ``crowding`` are per-generation bookkeeping filled in
    by the evolution engine."""

    genes: list[Gene]
    nodes: list[NodeSpec]
    id: int = 0
    objectives: tuple[float, float] | None = None
    rank: int | None = None
    crowding: float | None = None
    _plan: "_Plan | None" = field(default=None, repr=False, compare=False)

    @property
    def n_inputs(self) -> int:
        return sum(1 for n in self.nodes if n.role == INPUT)

    @property
    def n_outputs(self) -> int:
        return sum(1 for n in self.nodes if n.role == OUTPUT)

    @property
    def n_hidden(self) -> int:
        return sum(1 for n in self.nodes if n.role == HIDDEN)

    def innovations(self) -> set[int]:
        return {g.innovation for g in self.genes}

    def weights_by_innovation(self) -> dict[int, float]:
        return {g.innovation: g.weight for g in self.genes}

    def plan(self) -> "_Plan":
        if self._plan is None:
            self._plan = _build_plan(self)
        return self._plan


class _Plan:
    """Compiled evaluation order for one genome.

    Nodes get compact indices (inputs, bias, outputs, hidden sorted by
    id); ``order``/``in_ptr``/``in_src``/``in_w`` is a CSR-style walk of
    the non-source nodes in topological order, with each node's incoming
    edges kept in innovation order so summation order is reproducible.
    """

    __slots__ = ("n_nodes", "n_inputs", "n_outputs", "index_of",
                 "order", "in_ptr", "in_src", "in_w", "out_slots")

    def __init__(self, n_nodes, n_inputs, n_outputs, index_of,
                 order, in_ptr, in_src, in_w, out_slots):
        self.n_nodes = n_nodes
        self.n_inputs = n_inputs
        self.n_outputs = n_outputs
        self.index_of = index_of
        self.order = order
        self.in_ptr = in_ptr
        self.in_src = in_src
        self.in_w = in_w
        self.out_slots = out_slots


def _compact_indices(g: Genome) -> tuple[dict[int, int], int, int]:
    inputs = sorted(n.id for n in g.nodes if n.role == INPUT)
    bias = sorted(n.id for n in g.nodes if n.role == BIAS)
    outputs = sorted(n.id for n in g.nodes if n.role == OUTPUT)
    hidden = sorted(n.id for n in g.nodes if n.role == HIDDEN)
    index_of: dict[int, int] = {}
    for nid in inputs + bias + outputs + hidden:
        index_of[nid] = len(index_of)
    return index_of, len(inputs), len(outputs)


def _build_plan(g: Genome) -> _Plan:
    index_of, n_in, n_out = _compact_indices(g)
    n_nodes = len(index_of)
    n_sources = n_in + 1  # inputs plus bias

    incoming: list[list[tuple[int, float]]] = [[] for _ in range(n_nodes)]
    for gene in g.genes:
        if not gene.enabled:
            continue
        incoming[index_of[gene.terminal]].append(
            (index_of[gene.origin], gene.weight))

    # Kahn's algorithm over the enabled-edge graph; a min-heap keeps the
    # order deterministic.  Sources (inputs, bias) are preloaded values,
    # so their outgoing edges are released before the walk starts.
    indegree = [len(incoming[i]) for i in range(n_nodes)]
    successors: list[list[int]] = [[] for _ in range(n_nodes)]
    for dst in range(n_nodes):
        for src, _w in incoming[dst]:
            successors[src].append(dst)
    blocked = [i for i in range(n_sources) if indegree[i] > 0]
    if blocked:
        raise InvalidGenomeError(
            f"edges terminate at source nodes (compact slots {blocked})")
    for node in range(n_sources):
        for succ in successors[node]:
            indegree[succ] -= 1
    ready = [i for i in range(n_sources, n_nodes) if indegree[i] == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        node = heapq.heappop(ready)
        order.append(node)
        for succ in successors[node]:
            indegree[succ] -= 1
            if indegree[succ] == 0:
                heapq.heappush(ready, succ)
    # Anything left unordered sits on or behind a cycle.
    if len(order) != n_nodes - n_sources:
        raise InvalidGenomeError("cycle detected among enabled genes")

    in_ptr = np.zeros(len(order) + 1, dtype=np.int64)
    src_flat: list[int] = []
    w_flat: list[float] = []
    for k, node in enumerate(order):
        for src, w in incoming[node]:
            src_flat.append(src)
            w_flat.append(w)
        in_ptr[k + 1] = len(src_flat)
    out_slots = np.arange(n_sources, n_sources + n_out, dtype=np.int64)
    return _Plan(n_nodes, n_in, n_out, index_of,
                 np.asarray(order, dtype=np.int64), in_ptr,
                 np.asarray(src_flat, dtype=np.int64),
                 np.asarray(w_flat, dtype=np.float64), out_slots)


def minimal_genome(n_inputs: int, n_outputs: int,
                   rng: np.random.Generator, genome_id: int = 0) -> Genome:
    """Fully connected input+bias -> output net with no hidden nodes.

    Weights are uniform in [-1, 1]; innovations are numbered
    1..(n_inputs+1)*n_outputs in origin-major order (inputs first, bias
    last) so every minimal genome shares the same historical markings.
    """
    if n_inputs < 1 or n_outputs < 1:
        raise ValueError("need at least one input and one output")
    nodes = [NodeSpec(i, INPUT) for i in range(n_inputs)]
    bias_id = n_inputs
    nodes.append(NodeSpec(bias_id, BIAS))
    output_ids = list(range(n_inputs + 1, n_inputs + 1 + n_outputs))
    nodes.extend(NodeSpec(i, OUTPUT) for i in output_ids)

    genes = []
    innovation = 1
    for origin in list(range(n_inputs)) + [bias_id]:
        for terminal in output_ids:
            w = float(rng.uniform(-1.0, 1.0))
            genes.append(Gene(innovation, origin, terminal, w, True))
            innovation += 1
    return Genome(genes=genes, nodes=nodes, id=genome_id)


def activate(g: Genome, inputs) -> np.ndarray:
    """Forward pass: tanh of the weighted sum at every non-source node.

    Returns the raw output-node activations, each in [-1, 1].
    """
    x = np.asarray(inputs, dtype=np.float64)
    plan = g.plan()
    if x.shape != (plan.n_inputs,):
        raise ShapeError(
            f"expected {plan.n_inputs} inputs, got shape {x.shape}")
    values = np.zeros(plan.n_nodes, dtype=np.float64)
    values[:plan.n_inputs] = x
    values[plan.n_inputs] = 1.0  # bias
    order, in_ptr, in_src, in_w = plan.order, plan.in_ptr, plan.in_src, plan.in_w
    for k in range(order.shape[0]):
        acc = 0.0
        for e in range(in_ptr[k], in_ptr[k + 1]):
            acc += in_w[e] * values[in_src[e]]
        values[order[k]] = math.tanh(acc)
    return values[plan.out_slots].copy()


def raw_flops(g: Genome) -> float:
    """Estimated forward-pass cost: 2 per enabled edge, a fixed tanh
    charge per hidden/output node."""
    edges = sum(1 for gene in g.genes if gene.enabled)
    activations = sum(1 for n in g.nodes if n.role in (HIDDEN, OUTPUT))
    return EDGE_FLOPS * edges + ACTIVATION_FLOPS * activations


def complexity(g: Genome) -> float:
    """Forward-pass cost relative to the minimal net with the same I/O
    widths, so every minimal genome scores exactly 1.0."""
    n_in, n_out = g.n_inputs, g.n_outputs
    baseline = EDGE_FLOPS * (n_in + 1) * n_out + ACTIVATION_FLOPS * n_out
    return raw_flops(g) / baseline


def validate(g: Genome) -> list[str]:
    """Check every structural invariant; returns all violations found
    (empty list means the genome is well formed)."""
    violations: list[str] = []
    node_ids = [n.id for n in g.nodes]
    known = set(node_ids)
    if len(known) != len(node_ids):
        violations.append("duplicate node ids")
    n_bias = sum(1 for n in g.nodes if n.role == BIAS)
    if n_bias != 1:
        violations.append(f"expected exactly one bias node, found {n_bias}")

    seen_innov: set[int] = set()
    for gene in g.genes:
        if gene.innovation in seen_innov:
            violations.append(f"duplicate innovation {gene.innovation}")
        seen_innov.add(gene.innovation)
        if gene.origin == gene.terminal:
            violations.append(f"self-loop at node {gene.origin}")
        if gene.origin not in known:
            violations.append(f"gene {gene.innovation} references unknown "
                              f"origin {gene.origin}")
        if gene.terminal not in known:
            violations.append(f"gene {gene.innovation} references unknown "
                              f"terminal {gene.terminal}")

    incident = {nid: 0 for nid in known}
    for gene in g.genes:
        if gene.origin in incident:
            incident[gene.origin] += 1
        if gene.terminal in incident:
            incident[gene.terminal] += 1
    for n in g.nodes:
        if n.role == HIDDEN and incident.get(n.id, 0) == 0:
            violations.append(f"hidden node {n.id} has no incident gene")

    if not violations:
        try:
            _build_plan(g)
        except InvalidGenomeError as exc:
            violations.append(str(exc))
    return violations


def would_create_cycle(g: Genome, origin: int, terminal: int) -> bool:
    """True when an enabled origin->terminal edge would close a cycle in
    the enabled-gene graph."""
    if origin == terminal:
        return True
    adjacency: dict[int, list[int]] = {}
    for gene in g.genes:
        if gene.enabled:
            adjacency.setdefault(gene.origin, []).append(gene.terminal)
    stack = [terminal]
    seen = set()
    while stack:
        node = stack.pop()
        if node == origin:
            return True
        if node in seen:
            continue
        seen.add(node)
        stack.extend(adjacency.get(node, ()))
    return False


def copy_genome(g: Genome, new_id: int | None = None) -> Genome:
    """Fresh genome sharing no mutable state with the original."""
    return Genome(genes=list(g.genes), nodes=list(g.nodes),
                  id=g.id if new_id is None else new_id)


# --- text format -----------------------------------------------------------
#
# One genome per file:
#   genome <id> <n_inputs> <n_outputs> <n_hidden>
#   <innovation> <origin> <terminal> <weight> <enabled 0|1>   (one per gene)
#
# Weights use 17 significant digits, which round-trips float64 exactly.

def dumps_genome(g: Genome) -> str:
    lines = [f"genome {g.id} {g.n_inputs} {g.n_outputs} {g.n_hidden}"]
    for gene in g.genes:
        lines.append(f"{gene.innovation} {gene.origin} {gene.terminal} "
                     f"{gene.weight:.17g} {1 if gene.enabled else 0}")
    return "\n".join(lines) + "\n"


def loads_genome(text: str) -> Genome:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("genome "):
        raise ValueError("genome file must start with a 'genome' header line")
    header = lines[0].split()
    if len(header) != 5:
        raise ValueError(f"malformed genome header: {lines[0]!r}")
    gid, n_in, n_out, n_hidden = (int(tok) for tok in header[1:])

    genes = []
    for ln in lines[1:]:
        tok = ln.split()
        if len(tok) != 5:
            raise ValueError(f"malformed gene line: {ln!r}")
        genes.append(Gene(int(tok[0]), int(tok[1]), int(tok[2]),
                          float(tok[3]), tok[4] == "1"))

    bias_id = n_in
    fixed = set(range(n_in + 1 + n_out))
    nodes = [NodeSpec(i, INPUT) for i in range(n_in)]
    nodes.append(NodeSpec(bias_id, BIAS))
    nodes.extend(NodeSpec(i, OUTPUT)
                 for i in range(n_in + 1, n_in + 1 + n_out))
    referenced = ({gene.origin for gene in genes} |
                  {gene.terminal for gene in genes})
    hidden = sorted(referenced - fixed)
    if len(hidden) != n_hidden:
        raise ValueError(f"header declares {n_hidden} hidden nodes, "
                         f"genes reference {len(hidden)}")
    nodes.extend(NodeSpec(nid, HIDDEN) for nid in hidden)
    return Genome(genes=genes, nodes=nodes, id=gid)


def save_genome(g: Genome, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dumps_genome(g))


def load_genome(path) -> Genome:
    with open(path, "r", encoding="ascii") as fh:
        return loads_genome(fh.read())
