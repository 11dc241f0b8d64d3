"""Multi-objective neuroevolution engine.

Populations of network genomes are partitioned into niches by a gene
distance metric, ranked either by two-objective non-dominated sorting
(performance and experience gain) or by performance alone, and bred
hierarchically: selection, crossover and mutation inside each niche
first, then one global round over the niche champions.  Niche sizes
grow and shrink with shared fitness.  Two run drivers cover the
single-stage (performance only) and dual-stage (multi-objective phase
feeding a performance-only phase) training frameworks.

Every stochastic choice draws from the population's seeded stream, so a
fixed seed reproduces a run byte-for-byte.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .criteria import (ConfigurationError, CriteriaConfig, experience_gain,
                       performance_total)
from .genome import (HIDDEN, OUTPUT, Gene, Genome, NodeSpec, complexity,
                     copy_genome, minimal_genome)

logger = logging.getLogger(__name__)

MULTI = "multi"
SINGLE = "single"


@dataclass
class SpeciationParams:
    """Distance D = c1*E/N + c2*J/N + c3*W over excess/disjoint counts
    and summed matching-weight differences."""
    c1: float = 1.0
    c2: float = 1.0
    c3: float = 0.4
    compat_threshold: float = 3.0


@dataclass
class EvoParams:
    pop_size: int = 100
    max_generations: int = 50
    elitist_fraction: float = 0.02
    crossover_prob: float = 0.85
    weight_mut_prob: float = 0.25
    add_node_prob: float = 0.05
    add_edge_prob: float = 0.03


@dataclass
class Niche:
    id: int
    representative: Genome
    members: list[int] = field(default_factory=list)  # genome ids
    size_target: float = 0.0


@dataclass
class Population:
    genomes: list[Genome]
    niches: list[Niche]
    generation: int
    rng: np.random.Generator
    # Structural-mutation bookkeeping.  The registries reset every
    # generation so identical (origin, terminal) additions within one
    # generation share innovation numbers; the counters never reset.
    innovation_registry: dict[tuple[int, int], int] = field(default_factory=dict)
    split_registry: dict[int, int] = field(default_factory=dict)
    next_innovation: int = 1
    next_node_id: int = 0
    next_genome_id: int = 1
    next_niche_id: int = 1

    def by_id(self) -> dict[int, Genome]:
        return {g.id: g for g in self.genomes}

    def innovation_for(self, origin: int, terminal: int) -> int:
        key = (origin, terminal)
        inn = self.innovation_registry.get(key)
        if inn is None:
            inn = self.next_innovation
            self.next_innovation += 1
            self.innovation_registry[key] = inn
        return inn

    def node_for_split(self, gene_innovation: int) -> int:
        nid = self.split_registry.get(gene_innovation)
        if nid is None:
            nid = self.next_node_id
            self.next_node_id += 1
            self.split_registry[gene_innovation] = nid
        return nid

    def clear_registries(self) -> None:
        self.innovation_registry.clear()
        self.split_registry.clear()

    def fresh_genome_id(self) -> int:
        gid = self.next_genome_id
        self.next_genome_id += 1
        return gid


def distance(a: Genome, b: Genome, p: SpeciationParams) -> float:
    """Gene-alignment distance between two genomes.

    Non-matching genes beyond the other genome's highest innovation are
    excess, the rest disjoint; matching genes contribute the sum of
    absolute weight differences.  Counts are normalized by the larger
    gene count N, with N = 1 when both genomes are small (< 20 genes).
    """
    wa = a.weights_by_innovation()
    wb = b.weights_by_innovation()
    if not wa and not wb:
        return 0.0
    max_a = max(wa, default=0)
    max_b = max(wb, default=0)
    cutoff = min(max_a, max_b)
    excess = disjoint = 0
    for inn in set(wa).symmetric_difference(wb):
        if inn > cutoff:
            excess += 1
        else:
            disjoint += 1
    wdiff = sum(abs(wa[inn] - wb[inn]) for inn in wa.keys() & wb.keys())
    n = max(len(wa), len(wb))
    if len(wa) < 20 and len(wb) < 20:
        n = 1
    return p.c1 * excess / n + p.c2 * disjoint / n + p.c3 * wdiff


def speciate(pop: Population, p: SpeciationParams) -> Population:
    """Partition the population: each genome joins the first niche whose
    representative lies within the compatibility threshold, otherwise it
    founds a new niche with itself as representative.  Niches left empty
    are dropped."""
    for niche in pop.niches:
        niche.members = []
    niches = list(pop.niches)
    for g in pop.genomes:
        for niche in niches:
            if distance(g, niche.representative, p) <= p.compat_threshold:
                niche.members.append(g.id)
                break
        else:
            niches.append(Niche(id=pop.next_niche_id, representative=g,
                                members=[g.id]))
            pop.next_niche_id += 1
    pop.niches = [n for n in niches if n.members]
    return pop


def _dominates(a, b) -> bool:
    return (a[0] >= b[0] and a[1] >= b[1]
            and (a[0] > b[0] or a[1] > b[1]))


def nondominated_sort(objectives) -> list[int]:
    """Pareto ranks (1 = non-dominated) for a max-max objective list."""
    n = len(objectives)
    if n == 0:
        raise ValueError("nondominated_sort needs at least one point")
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    counts = [0] * n
    for p in range(n):
        for q in range(p + 1, n):
            if _dominates(objectives[p], objectives[q]):
                dominated_by[p].append(q)
                counts[q] += 1
            elif _dominates(objectives[q], objectives[p]):
                dominated_by[q].append(p)
                counts[p] += 1
    ranks = [0] * n
    front = [i for i in range(n) if counts[i] == 0]
    level = 1
    while front:
        nxt = []
        for p in front:
            ranks[p] = level
            for q in dominated_by[p]:
                counts[q] -= 1
                if counts[q] == 0:
                    nxt.append(q)
        front = nxt
        level += 1
    return ranks


def crowding_distance(front) -> list[float]:
    """Per-point crowding within one front: boundary points are infinite,
    interior points sum range-normalized neighbor gaps per objective."""
    n = len(front)
    if n == 0:
        return []
    dist = [0.0] * n
    if n <= 2:
        return [math.inf] * n
    for m in (0, 1):
        order = sorted(range(n), key=lambda i: (front[i][m], front[i][1 - m]))
        dist[order[0]] = math.inf
        dist[order[-1]] = math.inf
        span = front[order[-1]][m] - front[order[0]][m]
        if span <= 0:
            continue
        for k in range(1, n - 1):
            if dist[order[k]] != math.inf:
                dist[order[k]] += (front[order[k + 1]][m]
                                   - front[order[k - 1]][m]) / span
    return dist


def _sort_key(g: Genome):
    # Best first: lowest rank, widest crowding, then stable by id.
    return (g.rank, -(g.crowding if g.crowding is not None else math.inf), g.id)


def rank_population(pop: Population, mode: str) -> None:
    """Assign rank and crowding from cached objectives.  Multi mode uses
    non-dominated sorting plus per-front crowding; single mode ranks by
    performance alone (dense ranks, crowding pinned to infinity)."""
    objs = [g.objectives for g in pop.genomes]
    if mode == MULTI:
        ranks = nondominated_sort(objs)
        for g, r in zip(pop.genomes, ranks):
            g.rank = r
        by_rank: dict[int, list[int]] = {}
        for i, r in enumerate(ranks):
            by_rank.setdefault(r, []).append(i)
        for members in by_rank.values():
            dists = crowding_distance([objs[i] for i in members])
            for i, d in zip(members, dists):
                pop.genomes[i].crowding = d
    elif mode == SINGLE:
        values = sorted({o[0] for o in objs}, reverse=True)
        level = {v: k + 1 for k, v in enumerate(values)}
        for g in pop.genomes:
            g.rank = level[g.objectives[0]]
            g.crowding = math.inf
    else:
        raise ValueError(f"unknown mode {mode!r}")


def _scalar_fitness(g: Genome) -> float:
    f = 1.0 / g.rank
    c = g.crowding if g.crowding is not None else math.inf
    if math.isinf(c):
        return f * 2.0
    return f * (1.0 + c / (1.0 + c))


def largest_remainder(weights, total: int) -> list[int]:
    """Round non-negative weights to integers summing exactly to total,
    proportionally with largest-remainder tie-breaking."""
    wsum = float(sum(weights))
    if total <= 0 or wsum <= 0:
        return [0] * len(weights)
    raw = [w * total / wsum for w in weights]
    out = [int(math.floor(r)) for r in raw]
    shortfall = total - sum(out)
    order = sorted(range(len(raw)), key=lambda i: (out[i] - raw[i], i))
    for i in order[:shortfall]:
        out[i] += 1
    return out


def resize_niches(pop: Population, params: EvoParams,
                  protected: frozenset[int] = frozenset()) -> list[int]:
    """Regulate niche sizes by shared fitness.

    Each member's rank-derived fitness (1/rank, widened by crowding) is
    shared across its niche; a niche's new target is its summed shared
    fitness over the population mean, rounded largest-remainder so the
    targets total the population size.  Oversized niches drop their
    worst members (never a protected elite), undersized niches refill
    with mutated copies of survivors; refilled genomes inherit their
    source's rank and crowding until the next evaluation.
    Returns the rounded targets aligned with pop.niches.
    """
    index = pop.by_id()
    shared: dict[int, float] = {}
    for niche in pop.niches:
        size = len(niche.members)
        for gid in niche.members:
            shared[gid] = _scalar_fitness(index[gid]) / size
    mean_shared = sum(shared.values()) / len(pop.genomes)
    raw = [sum(shared[gid] for gid in niche.members) / mean_shared
           for niche in pop.niches]
    targets = largest_remainder(raw, params.pop_size)

    dropped: set[int] = set()
    for niche, target in zip(pop.niches, targets):
        niche.size_target = float(target)
        ordered = sorted(niche.members, key=lambda gid: _sort_key(index[gid]))
        if len(ordered) > target:
            keep = ordered[:target]
            keep += [gid for gid in ordered[target:] if gid in protected]
            dropped.update(gid for gid in ordered[target:]
                           if gid not in protected)
            niche.members = keep
    pop.genomes = [g for g in pop.genomes if g.id not in dropped]

    for niche, target in zip(pop.niches, targets):
        if not niche.members or len(niche.members) >= target:
            continue
        sources = sorted(niche.members, key=lambda gid: _sort_key(index[gid]))
        slot = 0
        while len(niche.members) < target:
            src = index[sources[slot % len(sources)]]
            child = mutate(copy_genome(src, pop.fresh_genome_id()),
                           pop, params, pop.rng)
            child.rank = src.rank
            child.crowding = src.crowding
            pop.genomes.append(child)
            index[child.id] = child
            niche.members.append(child.id)
            slot += 1

    # Elite exemptions can leave the total above pop_size; shed the
    # globally worst unprotected genomes to restore the exact headcount.
    while len(pop.genomes) > params.pop_size:
        victims = [g for g in pop.genomes if g.id not in protected]
        worst = max(victims, key=_sort_key)
        pop.genomes.remove(worst)
        for niche in pop.niches:
            if worst.id in niche.members:
                niche.members.remove(worst.id)
                break
    pop.niches = [n for n in pop.niches if n.members]
    return targets


def _tournament(member_ids, index, rng: np.random.Generator) -> Genome:
    ids = member_ids
    a = index[ids[int(rng.integers(len(ids)))]]
    b = index[ids[int(rng.integers(len(ids)))]]
    return a if _sort_key(a) <= _sort_key(b) else b


def select_parents_intra(niche: Niche, pop: Population,
                         rng: np.random.Generator) -> tuple[Genome, Genome]:
    """Two binary tournaments on (rank, crowding) inside one niche; a
    single-member niche yields its member twice without drawing."""
    index = pop.by_id()
    if len(niche.members) == 1:
        only = index[niche.members[0]]
        return only, only
    return (_tournament(niche.members, index, rng),
            _tournament(niche.members, index, rng))


def _rank_proportionate_pick(champions, rng: np.random.Generator) -> Genome:
    weights = [1.0 / c.rank for c in champions]
    total = sum(weights)
    u = float(rng.random()) * total
    acc = 0.0
    for c, w in zip(champions, weights):
        acc += w
        if u < acc:
            return c
    return champions[-1]


def select_parents_global(champions, rng: np.random.Generator
                          ) -> tuple[Genome, Genome]:
    """Two independent draws over the niche champions, each with
    probability proportional to 1/rank."""
    if not champions:
        raise ConfigurationError("global selection needs at least one champion")
    return (_rank_proportionate_pick(champions, rng),
            _rank_proportionate_pick(champions, rng))


def crossover(a: Genome, b: Genome, rng: np.random.Generator) -> Genome:
    """Recombine two parents by innovation alignment.

    Matching genes come from either parent with equal probability
    (weight and enabled flag together); excess and disjoint genes come
    only from the better-ranked parent, or from one parent chosen at
    random when the ranks tie.  Inherited genes that would close a cycle
    are disabled, keeping the child feed-forward.
    """
    genes_a = {g.innovation: g for g in a.genes}
    genes_b = {g.innovation: g for g in b.genes}
    matching = genes_a.keys() & genes_b.keys()
    child_genes: list[Gene] = []
    for inn in sorted(matching):
        child_genes.append(genes_a[inn] if rng.random() < 0.5 else genes_b[inn])

    rank_a = a.rank if a.rank is not None else 0
    rank_b = b.rank if b.rank is not None else 0
    if rank_a < rank_b:
        better = a
    elif rank_b < rank_a:
        better = b
    else:
        better = a if rng.random() < 0.5 else b
    donor = {g.innovation: g for g in better.genes}
    for inn in sorted(donor.keys() - matching):
        child_genes.append(donor[inn])
    child_genes.sort(key=lambda g: g.innovation)

    node_index = {n.id: n for n in a.nodes}
    node_index.update({n.id: n for n in b.nodes})
    fixed = [n for n in a.nodes if n.role != HIDDEN]
    referenced = ({g.origin for g in child_genes}
                  | {g.terminal for g in child_genes})
    hidden_ids = sorted(nid for nid in referenced
                        if node_index[nid].role == HIDDEN)
    nodes = fixed + [node_index[nid] for nid in hidden_ids]

    # Feed-forward repair: walk genes in innovation order and disable any
    # enabled gene that would close a cycle given the edges kept so far.
    adjacency: dict[int, list[int]] = {}
    for k, gene in enumerate(child_genes):
        if not gene.enabled:
            continue
        if _reaches(adjacency, gene.terminal, gene.origin):
            child_genes[k] = Gene(gene.innovation, gene.origin,
                                  gene.terminal, gene.weight, False)
        else:
            adjacency.setdefault(gene.origin, []).append(gene.terminal)
    return Genome(genes=child_genes, nodes=nodes, id=0)


def _reaches(adjacency: dict[int, list[int]], start: int, target: int) -> bool:
    if start == target:
        return True
    stack = [start]
    seen = set()
    while stack:
        node = stack.pop()
        if node == target:
            return True
        if node in seen:
            continue
        seen.add(node)
        stack.extend(adjacency.get(node, ()))
    return False


def mutate(g: Genome, pop: Population, params: EvoParams,
           rng: np.random.Generator) -> Genome:
    """Per-edge probabilistic mutation.

    Every enabled gene independently risks a weight change (Gaussian
    step, occasionally a full uniform reset) and a node insertion
    (original edge disabled, incoming weight 1, outgoing weight
    inherited).  Edge additions try min(gene count, 20) sampled node
    pairs, connecting unconnected pairs that keep the graph acyclic.
    New structure takes innovation numbers from the population registry
    so identical same-generation mutations share markings.
    """
    genes = list(g.genes)
    nodes = list(g.nodes)
    node_ids = {n.id for n in nodes}

    for idx, gene in enumerate(genes):
        if gene.enabled and rng.random() < params.weight_mut_prob:
            if rng.random() < 0.1:
                w = float(rng.uniform(-2.0, 2.0))
            else:
                w = gene.weight + float(rng.normal(0.0, 0.5))
            genes[idx] = Gene(gene.innovation, gene.origin, gene.terminal,
                              w, True)

    added: list[Gene] = []
    for idx, gene in enumerate(genes):
        if not gene.enabled or rng.random() >= params.add_node_prob:
            continue
        new_node = pop.node_for_split(gene.innovation)
        if new_node in node_ids:
            continue  # this split already lives in the genome
        genes[idx] = Gene(gene.innovation, gene.origin, gene.terminal,
                          gene.weight, False)
        added.append(Gene(pop.innovation_for(gene.origin, new_node),
                          gene.origin, new_node, 1.0, True))
        added.append(Gene(pop.innovation_for(new_node, gene.terminal),
                          new_node, gene.terminal, gene.weight, True))
        nodes.append(NodeSpec(new_node, HIDDEN))
        node_ids.add(new_node)
    genes.extend(added)

    origins = [n.id for n in nodes if n.role != OUTPUT]
    terminals = [n.id for n in nodes if n.role in (HIDDEN, OUTPUT)]
    pairs = {(gene.origin, gene.terminal) for gene in genes}
    adjacency: dict[int, list[int]] = {}
    for gene in genes:
        if gene.enabled:
            adjacency.setdefault(gene.origin, []).append(gene.terminal)
    attempts = min(len(genes), 20)
    for _ in range(attempts):
        if rng.random() >= params.add_edge_prob:
            continue
        origin = origins[int(rng.integers(len(origins)))]
        terminal = terminals[int(rng.integers(len(terminals)))]
        if origin == terminal or (origin, terminal) in pairs:
            continue
        if _reaches(adjacency, terminal, origin):
            continue
        genes.append(Gene(pop.innovation_for(origin, terminal), origin,
                          terminal, float(rng.uniform(-1.0, 1.0)), True))
        pairs.add((origin, terminal))
        adjacency.setdefault(origin, []).append(terminal)

    genes.sort(key=lambda gene: gene.innovation)
    return Genome(genes=genes, nodes=nodes, id=g.id)


def evaluate_population(pop: Population, evaluator, mode: str) -> None:
    """Run the evaluator over every genome, caching (F, G) objectives,
    then rank.  A failing evaluator scores that genome worst (0, 0);
    configuration errors are not failures and abort with the generation
    and genome named."""
    for g in pop.genomes:
        try:
            res = evaluator(g)
        except ConfigurationError as exc:
            raise ConfigurationError(
                f"generation {pop.generation}, genome {g.id}: {exc}") from exc
        except Exception:
            logger.exception("evaluator failed on genome %d; scoring worst",
                             g.id)
            res = (0.0, 0.0)
        if isinstance(res, (int, float)):
            res = (float(res), 0.0)
        elif len(res) == 1:
            res = (float(res[0]), 0.0)
        g.objectives = (float(res[0]), float(res[1]))
    rank_population(pop, mode)


def _elite_count(params: EvoParams) -> int:
    return max(1, round(params.elitist_fraction * params.pop_size))


def next_generation(pop: Population, params: EvoParams,
                    speciation: SpeciationParams
                    ) -> tuple[Population, dict[int, int]]:
    """Breed the successor population from a ranked one.

    Elites carry over unchanged; niches are resized; each niche fills an
    offspring quota proportional to its adjusted size via tournament
    selection, crossover (or cloning) and mutation; one global round
    over the niche champions contributes as many offspring as there are
    niches.  The new population is then re-speciated against the old
    niche champions.  Returns (new population, niche targets by id).
    """
    rng = pop.rng
    pop.clear_registries()

    elites = sorted(pop.genomes, key=_sort_key)[:_elite_count(params)]
    elite_ids = frozenset(g.id for g in elites)
    elite_copies = [copy_genome(g) for g in elites]

    niches_at_entry = list(pop.niches)
    targets = resize_niches(pop, params, protected=elite_ids)
    target_by_id = {n.id: int(t)
                    for n, t in zip(niches_at_entry, targets)}

    index = pop.by_id()
    champions = []
    for niche in pop.niches:
        champ = index[min(niche.members, key=lambda gid: _sort_key(index[gid]))]
        niche.representative = champ
        champions.append(champ)

    k = len(elite_copies)
    n_champ_slots = min(len(pop.niches), max(0, params.pop_size - k))
    budget = params.pop_size - k - n_champ_slots
    quotas = largest_remainder([len(n.members) for n in pop.niches], budget)

    offspring: list[Genome] = []
    for niche, quota in zip(pop.niches, quotas):
        for _ in range(quota):
            if rng.random() < params.crossover_prob:
                p1, p2 = select_parents_intra(niche, pop, rng)
                child = crossover(p1, p2, rng)
            else:
                child = copy_genome(_tournament(niche.members, index, rng))
            child.id = pop.fresh_genome_id()
            offspring.append(mutate(child, pop, params, rng))
    for _ in range(n_champ_slots):
        if rng.random() < params.crossover_prob:
            p1, p2 = select_parents_global(champions, rng)
            child = crossover(p1, p2, rng)
        else:
            child = copy_genome(_rank_proportionate_pick(champions, rng))
        child.id = pop.fresh_genome_id()
        offspring.append(mutate(child, pop, params, rng))

    new_pop = Population(
        genomes=elite_copies + offspring,
        niches=[Niche(id=n.id, representative=n.representative)
                for n in pop.niches],
        generation=pop.generation + 1,
        rng=pop.rng,
        innovation_registry=pop.innovation_registry,
        split_registry=pop.split_registry,
        next_innovation=pop.next_innovation,
        next_node_id=pop.next_node_id,
        next_genome_id=pop.next_genome_id,
        next_niche_id=pop.next_niche_id)
    speciate(new_pop, speciation)
    return new_pop, target_by_id


def evolve_generation(pop: Population, params: EvoParams, mode: str,
                      evaluator, speciation: SpeciationParams | None = None
                      ) -> Population:
    """Evaluate and rank the current generation, then breed the next one
    (same population size)."""
    speciation = speciation or SpeciationParams()
    evaluate_population(pop, evaluator, mode)
    new_pop, _targets = next_generation(pop, params, speciation)
    return new_pop


def initial_population(params: EvoParams, n_inputs: int, n_outputs: int,
                       speciation: SpeciationParams,
                       rng: np.random.Generator) -> Population:
    """Generation 0: pop_size minimal genomes with independently sampled
    weights, speciated from scratch."""
    genomes = [minimal_genome(n_inputs, n_outputs, rng, genome_id=i + 1)
               for i in range(params.pop_size)]
    pop = Population(
        genomes=genomes, niches=[], generation=0, rng=rng,
        next_innovation=(n_inputs + 1) * n_outputs + 1,
        next_node_id=n_inputs + n_outputs + 1,
        next_genome_id=params.pop_size + 1)
    speciate(pop, speciation)
    return pop


# --- run drivers -------------------------------------------------------------

@dataclass
class GenerationStats:
    generation: int
    mode: str
    best_F: float
    mean_F: float
    best_G: float
    mean_G: float
    n_niches: int
    max_niche_frac: float
    niche_sizes: dict[int, int]
    niche_targets: dict[int, int] | None = None  # set when the generation bred


@dataclass
class ParetoEntry:
    generation: int
    genome_id: int
    F: float
    G: float
    complexity: float


@dataclass
class EvolutionRecord:
    generations: list[GenerationStats] = field(default_factory=list)
    pareto_snapshots: list[ParetoEntry] = field(default_factory=list)
    pareto_front: list[ParetoEntry] = field(default_factory=list)
    final_population: Population | None = None
    champion: Genome | None = None
    n_genome_evaluations: int = 0
    stage1_generations: int = 0


def _collect_stats(pop: Population, mode: str) -> GenerationStats:
    fs = [g.objectives[0] for g in pop.genomes]
    gs = [g.objectives[1] for g in pop.genomes]
    sizes = {n.id: len(n.members) for n in pop.niches}
    biggest = max(sizes.values()) if sizes else 0
    return GenerationStats(
        generation=pop.generation, mode=mode,
        best_F=max(fs), mean_F=sum(fs) / len(fs),
        best_G=max(gs), mean_G=sum(gs) / len(gs),
        n_niches=len(pop.niches),
        max_niche_frac=biggest / len(pop.genomes),
        niche_sizes=sizes)


def _snapshot_front(pop: Population) -> list[ParetoEntry]:
    return [ParetoEntry(pop.generation, g.id, g.objectives[0],
                        g.objectives[1], complexity(g))
            for g in pop.genomes if g.rank == 1]


def _merge_archive(archive: list[ParetoEntry],
                   front: list[ParetoEntry]) -> list[ParetoEntry]:
    """Cumulative non-dominated set over everything seen so far; a point
    only leaves the archive when a new point dominates it."""
    merged = list(archive)
    for entry in front:
        if any((e.F, e.G) == (entry.F, entry.G) for e in merged):
            continue
        merged.append(entry)
    keep = []
    for e in merged:
        if not any(_dominates((o.F, o.G), (e.F, e.G)) for o in merged):
            keep.append(e)
    return keep


def _champion(pop: Population) -> Genome:
    return max(pop.genomes, key=lambda g: (g.objectives[0], -g.id))


def _run(params: EvoParams, evaluator, speciation: SpeciationParams,
         rng: np.random.Generator, n_inputs: int,
         stage1_generations: int, total_generations: int,
         handoff) -> EvolutionRecord:
    """Shared driver: ``total_generations`` evaluation rounds with
    breeding between consecutive rounds.  Rounds below
    ``stage1_generations`` rank multi-objectively (and feed the Pareto
    record); the boundary applies ``handoff`` instead of normal
    breeding.  A zero-generation budget still evaluates generation 0."""
    record = EvolutionRecord(stage1_generations=stage1_generations)
    pop = initial_population(params, n_inputs, 2, speciation, rng)
    rounds = max(1, total_generations)
    for r in range(rounds):
        mode = MULTI if r < stage1_generations else SINGLE
        evaluate_population(pop, evaluator, mode)
        record.n_genome_evaluations += len(pop.genomes)
        stats = _collect_stats(pop, mode)
        record.generations.append(stats)
        if mode == MULTI:
            front = _snapshot_front(pop)
            record.pareto_snapshots.extend(front)
            record.pareto_front = _merge_archive(record.pareto_front, front)
        if r == rounds - 1:
            break
        if r == stage1_generations - 1:
            pop = handoff(pop, params, speciation)
        else:
            pop, targets = next_generation(pop, params, speciation)
            stats.niche_targets = targets
    record.final_population = pop
    record.champion = _champion(pop)
    return record


def run_single_stage(params: EvoParams, scenarios, robot_spec,
                     rng: np.random.Generator,
                     speciation: SpeciationParams | None = None,
                     criteria_cfg: CriteriaConfig | None = None,
                     evaluator=None) -> EvolutionRecord:
    """Performance-only neuroevolution for the full generation budget."""
    speciation = speciation or SpeciationParams()
    if evaluator is None:
        evaluator = make_scenario_evaluator(robot_spec, scenarios, criteria_cfg)
    return _run(params, evaluator, speciation, rng, robot_spec.n_inputs,
                stage1_generations=0,
                total_generations=params.max_generations,
                handoff=None)


def run_dual_stage(params: EvoParams, scenarios, robot_spec,
                   rng: np.random.Generator,
                   speciation: SpeciationParams | None = None,
                   criteria_cfg: CriteriaConfig | None = None,
                   evaluator=None) -> EvolutionRecord:
    """Multi-objective stage for the first half of the generation budget,
    then a performance-only stage seeded with the better half of the
    stage-1 population (refilled to size with mutated copies).  Total
    evaluations match a single-stage run with the same parameters."""
    speciation = speciation or SpeciationParams()
    if evaluator is None:
        evaluator = make_scenario_evaluator(robot_spec, scenarios, criteria_cfg)
    stage1 = math.ceil(params.max_generations / 2)
    return _run(params, evaluator, speciation, rng, robot_spec.n_inputs,
                stage1_generations=stage1,
                total_generations=params.max_generations,
                handoff=_performance_handoff)


def _performance_handoff(pop: Population, params: EvoParams,
                         speciation: SpeciationParams) -> Population:
    """Stage boundary: keep the top half by performance, refill to full
    size with mutated copies of the survivors, re-speciate."""
    pop.clear_registries()
    index = pop.by_id()
    for niche in pop.niches:
        niche.representative = index[min(
            niche.members, key=lambda gid: _sort_key(index[gid]))]
    ranked = sorted(pop.genomes,
                    key=lambda g: (-g.objectives[0], g.id))
    keep = ranked[:max(1, params.pop_size // 2)]
    carried = [copy_genome(g) for g in keep]
    refills = []
    slot = 0
    while len(carried) + len(refills) < params.pop_size:
        src = keep[slot % len(keep)]
        refills.append(mutate(copy_genome(src, pop.fresh_genome_id()),
                              pop, params, pop.rng))
        slot += 1
    new_pop = Population(
        genomes=carried + refills,
        niches=[Niche(id=n.id, representative=n.representative)
                for n in pop.niches],
        generation=pop.generation + 1,
        rng=pop.rng,
        innovation_registry=pop.innovation_registry,
        split_registry=pop.split_registry,
        next_innovation=pop.next_innovation,
        next_node_id=pop.next_node_id,
        next_genome_id=pop.next_genome_id,
        next_niche_id=pop.next_niche_id)
    speciate(new_pop, speciation)
    return new_pop


def make_scenario_evaluator(robot_spec, scenarios,
                            criteria_cfg: CriteriaConfig | None = None):
    """Evaluator closure: roll a genome through every scenario, sum the
    per-scenario performance, and take the MST experience gain over the
    pooled experience points.  Tracks rollout counts on ``.calls``."""
    from .simworld import simulate_scenario

    if not scenarios:
        raise ConfigurationError("need at least one training scenario")
    cfg = criteria_cfg or CriteriaConfig(n_scenarios=len(scenarios))
    calls = {"genomes": 0, "rollouts": 0}

    def evaluator(genome: Genome) -> tuple[float, float]:
        results = [simulate_scenario(genome, robot_spec, sc)
                   for sc in scenarios]
        calls["genomes"] += 1
        calls["rollouts"] += len(results)
        F = performance_total(results)
        G = experience_gain([r.experience_points for r in results], cfg)
        return (F, G)

    evaluator.calls = calls
    return evaluator
