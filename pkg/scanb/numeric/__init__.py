"""Dense tensors, gradient tape, optimizer and oracles."""

from scanb.numeric.gradcheck import finite_diff_check as finite_diff_check
from scanb.numeric.ops import softmax_rows as softmax_rows
from scanb.numeric.optim import OptimizerState as OptimizerState
from scanb.numeric.optim import adam_step as adam_step
from scanb.numeric.tensor import GradientSet as GradientSet
from scanb.numeric.tensor import Parameter as Parameter
from scanb.numeric.tensor import Tensor as Tensor
from scanb.numeric.tensor import backward as backward
from scanb.numeric.tensor import matmul as matmul
from scanb.numeric.tensor import tensor as tensor
