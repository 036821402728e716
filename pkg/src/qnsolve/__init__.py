"""Linear solves with limited-memory quasi-Newton matrices.

The main entry points are :class:`PairBuffer` (pair storage),
:func:`build_states` / :func:`solve` for the restricted Broyden class and
:func:`build_sr1` / :func:`solve_sr1` for SR1.
"""
from qnsolve.baselines import (
    UnrolledUpdate,
    recursive_H_solve,
    smw_solve,
    sr1_self_dual_solve,
    two_loop_solve,
    unroll_forward,
    unroll_inverse,
)
from qnsolve.bench import (
    ExperimentConfig,
    ProblemInstance,
    SolveReport,
    emit_csv,
    flop_model,
    gen_instance,
    run_benchmark,
)
from qnsolve.broyden_compact import (
    CompactForward,
    CompactInverse,
    assemble_Mtilde_direct,
    build_states,
    multiply_forward,
    solve,
)
from qnsolve.errors import (
    BreakdownError,
    DegenerateUpdateError,
    InstanceGenerationError,
    QuasiNewtonError,
    SingularMatrixError,
    StaleStateError,
)
from qnsolve.kernels import BACKEND, count_inner_products
from qnsolve.qnstore import GramCache, PairBuffer, push_pair
from qnsolve.spectral import SpectrumReport, eigen_small, spectrum, thin_qr
from qnsolve.sr1_compact import (
    Sr1Forward,
    Sr1Inverse,
    build_sr1,
    build_sr1_forward,
    multiply_sr1_forward,
    solve_sr1,
)

__version__ = "0.1.0"
