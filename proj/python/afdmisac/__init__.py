"""AFDM-ISAC delay-Doppler simulation core (Python bindings)."""

from ._core import (  # noqa: F401
    DDGrid,
    Error,
    KernelPath,
    ValidationError,
    check_config,
    circ_conv2,
    cnmse,
    constellation,
    default_config,
    default_grid,
    dft2,
    dirichlet,
    fim,
    generate_pass,
    idft2,
    isac_filter,
    mmse_filter,
    normalize_precoder,
    preset_names,
    sensing_cost,
    sensitivity_map,
    synthesize_kernel,
)

__version__ = "0.1.0"
