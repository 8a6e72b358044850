"""Consensus clustering refined by attribute-weighted description length and
agreement-fitness local search."""

from .baseclust import agglomerative, assign_nearest_centroid, fcm, kmeans
from .consensus import agreement_matrix, build_indicator, initial_solution, run_ensemble
from .dataio import Dataset, attribute_weights, generate_halfring, load_builtin, load_dataset, normalize
from .gamo import GamoParams, abmdlgao, epafgao, epmdlgao, gamo_cluster, gamo_pipeline
from .objectives import agreement_fitness, awdl, consensus_threshold, displacement_probability
from .validation import accuracy, ari, f_measure, nmi, rand_index

__version__ = "0.1.0"

__all__ = [
    "agglomerative", "assign_nearest_centroid", "fcm", "kmeans",
    "agreement_matrix", "build_indicator", "initial_solution", "run_ensemble",
    "Dataset", "attribute_weights", "generate_halfring", "load_builtin", "load_dataset", "normalize",
    "GamoParams", "abmdlgao", "epafgao", "epmdlgao", "gamo_cluster", "gamo_pipeline",
    "agreement_fitness", "awdl", "consensus_threshold", "displacement_probability",
    "accuracy", "ari", "f_measure", "nmi", "rand_index",
]
