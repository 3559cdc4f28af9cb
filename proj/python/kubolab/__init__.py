"""Python access to the kubolab conductivity library."""

from ._core import (
    ConfigError,
    DomainError,
    Geometry,
    StateError,
    __version__,
    eigenvalues,
    field_primitive,
    hamiltonian,
    kubo_eta,
    realization_seeds,
    run,
    streda,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "Geometry",
    "StateError",
    "__version__",
    "eigenvalues",
    "field_primitive",
    "hamiltonian",
    "kubo_eta",
    "realization_seeds",
    "run",
    "streda",
]
