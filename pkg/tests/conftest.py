import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from moneat.evolution import EvoParams, Population
from moneat.genome import Gene, Genome, NodeSpec, minimal_genome


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_genome(n_in, n_out, genes, hidden=(), genome_id=0):
    """Hand-build a genome: fixed input/bias/output roster plus explicit
    hidden ids.  ``genes`` rows are (innovation, origin, terminal,
    weight[, enabled])."""
    nodes = [NodeSpec(i, "input") for i in range(n_in)]
    nodes.append(NodeSpec(n_in, "bias"))
    nodes.extend(NodeSpec(n_in + 1 + k, "output") for k in range(n_out))
    nodes.extend(NodeSpec(h, "hidden") for h in hidden)
    gene_list = []
    for row in genes:
        inn, origin, terminal, weight = row[:4]
        enabled = row[4] if len(row) > 4 else True
        gene_list.append(Gene(inn, origin, terminal, float(weight), enabled))
    gene_list.sort(key=lambda g: g.innovation)
    return Genome(genes=gene_list, nodes=nodes, id=genome_id)


def scratch_population(n_in, n_out, seed=0, genomes=()):
    return Population(
        genomes=list(genomes), niches=[], generation=0,
        rng=np.random.default_rng(seed),
        next_innovation=(n_in + 1) * n_out + 1,
        next_node_id=n_in + n_out + 1)


def random_structured_genome(rng, n_in=4, n_out=2, rounds=5):
    """Genome with realistic evolved structure: a chain of mutation
    rounds applied to a minimal genome."""
    from moneat.evolution import mutate

    params = EvoParams(weight_mut_prob=0.5, add_node_prob=0.3,
                       add_edge_prob=0.4)
    pop = scratch_population(n_in, n_out, seed=int(rng.integers(2 ** 31)))
    g = minimal_genome(n_in, n_out, rng)
    for _ in range(rounds):
        g = mutate(g, pop, params, rng)
        pop.clear_registries()
    return g
