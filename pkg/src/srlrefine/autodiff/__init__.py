from .tensor import (
    DEFAULT_DTYPE, ShapeError, Tensor, add, as_tensor, backward, concat, div, dropout,
    dropout_mask, elu, exp, getitem, grad, is_grad_enabled, log, log_softmax, matmul, mean,
    mul, neg, no_grad, reshape, sigmoid, softmax, stack, sub, swapaxes, take, tanh, transpose,
    tsum,
)
from .module import Module, init_glorot, init_normal, parameter, zeros
from .optim import Adam, AdamState
from .gradcheck import gradient_check, numerical_gradient
from . import checkpoint
