"""Predictive-distribution constructors: the model battery.

Each constructor returns a Model whose provenance string names the
constructor and its parameters, so simulation reports can identify which
model produced each record.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distcore import Corpus, Dist, Partition, coarsen, miscalibration
from .worlds import World


@dataclass(frozen=True)
class Model:
    dist: Dist
    provenance: str

    @property
    def n_statements(self) -> int:
        return self.dist.n_statements


def empirical_model(corpus: Corpus) -> Model:
    """Relative-frequency model; never places mass on unseen statements."""
    if corpus.n < 1:
        raise ValueError("empirical model needs a nonempty corpus")
    return Model(
        dist=Dist(corpus.counts / corpus.n),
        provenance=f"empirical(n={corpus.n})",
    )


def calibrated_model(world: World, pi: Partition) -> Model:
    """The coarsening of the true document distribution under pi.

    Calibrated by construction; knowing the true world is a
    simulation-only privilege.
    """
    if world.n_statements != pi.n_statements:
        raise ValueError("dimension mismatch: world and partition universe sizes differ")
    return Model(
        dist=coarsen(world.dist, pi),
        provenance=f"calibrated(cells={pi.n_cells})",
    )


def spike_model(corpus: Corpus, beta: float, rng: np.random.Generator) -> Model:
    """Empirical model mixed with a point mass beta on one unseen statement.

    The spike target is drawn uniformly from the unseen set with the
    caller's rng and recorded in the provenance.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    if beta == 0.0:
        base = empirical_model(corpus)
        return Model(dist=base.dist, provenance=f"spike(beta=0, n={corpus.n})")
    unseen = corpus.unseen
    if unseen.size == 0:
        raise ValueError("spike model with beta > 0 needs an unseen statement")
    target = int(rng.choice(unseen))
    mass = (1.0 - beta) * (corpus.counts / corpus.n)
    mass[target] += beta
    return Model(dist=Dist(mass), provenance=f"spike(beta={beta:g}, target={target})")


def scatter_model(corpus: Corpus, beta: float) -> Model:
    """Empirical model mixed with mass beta spread uniformly over the unseen set."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    if beta == 0.0:
        base = empirical_model(corpus)
        return Model(dist=base.dist, provenance=f"scatter(beta=0, n={corpus.n})")
    unseen = corpus.unseen
    if unseen.size == 0:
        raise ValueError("scatter model with beta > 0 needs an unseen statement")
    mass = (1.0 - beta) * (corpus.counts / corpus.n)
    mass[unseen] += beta / unseen.size
    return Model(dist=Dist(mass), provenance=f"scatter(beta={beta:g})")


def perturbed_calibrated_model(
    world: World, pi: Partition, eps: float, rng: np.random.Generator
) -> Model:
    """Mixture (1-eps) * coarsening + eps * random distribution.

    The mixture guarantees TV(g, coarsening) <= eps; the realized
    miscalibration is recomputed (level sets shift under perturbation)
    and recorded in the provenance.
    """
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    base = coarsen(world.dist, pi)
    noise = rng.dirichlet(np.ones(world.n_statements))
    g = Dist((1.0 - eps) * base.mass + eps * noise)
    mis = miscalibration(g, world.dist)
    return Model(dist=g, provenance=f"perturbed(eps={eps:g}, mis={mis:.6g})")
