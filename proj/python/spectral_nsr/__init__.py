"""Spectral filtering over reasoning graphs with a symbolic forward chainer."""

from ._core import (
    ChebyshevFilter,
    Checkpoint,
    Dataset,
    Graph,
    Laplacian,
    SnsrError,
    SpectralBasis,
    Task,
    chebyshev_filter,
    eigendecompose,
    estimate_lambda_max,
    evaluate,
    exact_filter,
    fit_chebyshev,
    forward_chain,
    gen_conflict,
    gen_kinship,
    gen_transitive,
    generate_dataset,
    gft,
    igft,
    lambda_max_bound,
    laplacian,
    run_pipeline,
    similarity_graph,
    train,
    untrained,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
