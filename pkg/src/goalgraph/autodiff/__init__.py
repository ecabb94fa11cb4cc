from .tensor import Parameter, ShapeMismatch, Tensor
from .rng import RngStream
from .nn import DegenerateInput, ParameterStore
from .gradcheck import grad_check

__all__ = [
    "Tensor",
    "Parameter",
    "ShapeMismatch",
    "RngStream",
    "ParameterStore",
    "DegenerateInput",
    "grad_check",
]
