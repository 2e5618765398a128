from . import ops
from .gradcheck import grad_check, run_op_suite
from .tensor import Tensor, backward, grad_enabled, gradients, no_grad

__all__ = ["Tensor", "backward", "gradients", "grad_enabled", "no_grad",
           "ops", "grad_check", "run_op_suite"]
