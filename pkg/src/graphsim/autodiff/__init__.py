from .tensor import (
    SegmentIndex,
    ShapeError,
    Tape,
    Tensor,
    add,
    as_tensor,
    concat,
    gather_rows,
    matmul,
    mul,
    reduce_sum,
    relu,
    reshape,
    scale,
    segment_softmax,
    segment_sum,
    sigmoid,
    softmax,
    sub,
    swap_last,
    take,
    tanh,
)
from .nn import (
    MLPSpec,
    NonFiniteGradient,
    ParamStore,
    adam_step,
    glorot_scaled_init,
    gru_cell,
    init_gru,
    init_mlp,
    mlp_apply,
)
from .gradcheck import finite_diff_gradcheck, gradcheck_report
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
