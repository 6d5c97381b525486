"""QUBO toolkit: recursive decomposition solver, annealing samplers,
SVM-to-QUBO training and minor-embedding benchmarks."""

from .errors import (
    CapacityError,
    DataError,
    DimensionError,
    ParameterError,
    QuboParseError,
    ToolkitError,
)
from .qubo import (
    LinearConstraint,
    QuboMatrix,
    Sample,
    SampleSet,
    VariableMap,
    compose_penalty,
    decode_integers,
    encode_integers,
    energy,
    extract_submatrix,
    fix_variables,
    from_symmetric,
    normalized_gap,
    parse_qubo_file,
    random_clique_qubo,
    serialize_qubo_file,
    to_minimization,
)
from .samplers import (
    SamplerOutcome,
    SamplerParams,
    exhaustive_solve,
    sampler_dispatch,
    simulated_anneal,
)
from .qsplit import QSplitConfig, SolveReport, qsplit_solve
from .svm import Dataset, EnsembleModel, KernelSpec, SvmModel, build_svm_qubo, f1_score, predict, train
from .embedding import (
    HardwareGraph,
    ProblemGraph,
    chimera_graph,
    clique_graph,
    embedding_stats,
    find_embedding,
    verify_embedding,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "EnsembleModel",
    "KernelSpec",
    "SvmModel",
    "build_svm_qubo",
    "f1_score",
    "predict",
    "train",
    "HardwareGraph",
    "ProblemGraph",
    "chimera_graph",
    "clique_graph",
    "embedding_stats",
    "find_embedding",
    "verify_embedding",
    "CapacityError",
    "DataError",
    "DimensionError",
    "LinearConstraint",
    "ParameterError",
    "QSplitConfig",
    "QuboMatrix",
    "QuboParseError",
    "Sample",
    "SampleSet",
    "SamplerOutcome",
    "SamplerParams",
    "SolveReport",
    "ToolkitError",
    "VariableMap",
    "compose_penalty",
    "decode_integers",
    "encode_integers",
    "energy",
    "exhaustive_solve",
    "extract_submatrix",
    "fix_variables",
    "from_symmetric",
    "normalized_gap",
    "parse_qubo_file",
    "qsplit_solve",
    "random_clique_qubo",
    "sampler_dispatch",
    "serialize_qubo_file",
    "simulated_anneal",
    "to_minimization",
]
