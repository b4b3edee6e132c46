"""Stencil IR, lowering of collision rules, boundaries and C emission."""

from .boundary import (
    UBB, BoundaryMode, BoundarySpec, IndexList, NoSlip, build_index_list,
    lower_boundary, user_defined,
)
from .emit import (
    EmissionError, EmittedKernelSource, abi_description, build_shared, emit,
    emit_driver, find_compiler, load_kernel,
)
from .interp import compile_kernel, run_kernel
from .ir import (
    FLUID, Conditional, Field, FieldAccess, FlagTest, KernelAST, Layout, Select,
    SplitInfo, StreamingPattern,
)
from .lower import (
    CompiledIn, PatternFieldError, SplitError, UnsupportedBoundaryError, lower,
    read_slot, split_inner_loop, write_slot,
)
