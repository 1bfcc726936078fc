"""Simulation and verification workbench for innovation and hallucination
rates of statistical language models over finite statement universes."""

from .distcore import (
    Corpus,
    Dist,
    Partition,
    coarsen,
    level_set_partition,
    mass_on,
    miscalibration,
    tv_distance,
)
from .measures import (
    EmbeddingTable,
    IntervalEstimate,
    clopper_pearson,
    cosine_similarity,
    empirical_innovation_rate,
    good_turing,
    hallucination_rate,
    innovation_rate,
    load_embedding_table,
    missing_mass,
    semantic_innovation_rate,
)
from .models import (
    Model,
    calibrated_model,
    empirical_model,
    perturbed_calibrated_model,
    scatter_model,
    spike_model,
)
from .worlds import (
    MetaSpec,
    Posterior,
    World,
    conditional_world_sampler,
    exact_posterior,
    expected_hallucination,
    prob_hallucinate,
    regularity_ratio,
    sample_corpus,
    sample_world,
)

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "Dist",
    "EmbeddingTable",
    "IntervalEstimate",
    "MetaSpec",
    "Model",
    "Partition",
    "Posterior",
    "World",
    "calibrated_model",
    "clopper_pearson",
    "coarsen",
    "conditional_world_sampler",
    "cosine_similarity",
    "empirical_innovation_rate",
    "empirical_model",
    "exact_posterior",
    "expected_hallucination",
    "good_turing",
    "hallucination_rate",
    "innovation_rate",
    "level_set_partition",
    "load_embedding_table",
    "mass_on",
    "miscalibration",
    "missing_mass",
    "perturbed_calibrated_model",
    "prob_hallucinate",
    "regularity_ratio",
    "sample_corpus",
    "sample_world",
    "scatter_model",
    "semantic_innovation_rate",
    "spike_model",
    "tv_distance",
]
