"""Random-unitary approximation of quantum channels.

Channel representations and conversions live in :mod:`channels`, the
approximation itself in :mod:`approximation`, entropy / p-norm optimizers in
:mod:`metrics`, the qubit circuit model in :mod:`circuits` and diamond-norm
estimation in :mod:`diamond`.
"""
from .numerics import (
    CapacityError,
    ChannelForgeError,
    DimensionError,
    ParameterError,
    StructuralError,
    ValidationError,
)
from .channels import (
    ChoiMatrix,
    KrausChannel,
    RandomUnitaryChannel,
    StinespringDilation,
    validate_cptp,
)
from .approximation import ApproxChannel, build_approximation

__version__ = "0.1.0"
