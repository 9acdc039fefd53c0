"""Interior point LP solver exploiting block-diagonal-plus-low-rank structure.

Workflow: ingest or generate a standard-form LP (model), detect the block
structure of its constraint matrix (detect), then solve it with the full or
the structure-reducing Newton backend (ipm).  The cli module wires these
into the `blocklp` command.
"""

from .backend import COMPILED
from .detect import (
    Block,
    BlockStructure,
    DetectionParams,
    Graph,
    detect_structure,
    validate_structure,
)
from .errors import BlockLpError
from .ipm import IpmOptions, IpmState, SolveReport, solve
from .linalg import DenseSymMatrix, SparseMatrix, from_dense, from_triplets
from .model import (
    CplSpec,
    GeneralLP,
    RtConfig,
    RtStructure,
    StandardFormLP,
    build_cpl,
    dualize,
    gen_preset,
    gen_radiotherapy,
    instance_from_json,
    instance_to_json,
    parse_mps,
    to_standard_form,
)

__version__ = "0.1.0"

__all__ = [
    "Block",
    "BlockLpError",
    "BlockStructure",
    "COMPILED",
    "CplSpec",
    "DenseSymMatrix",
    "DetectionParams",
    "GeneralLP",
    "Graph",
    "IpmOptions",
    "IpmState",
    "RtConfig",
    "RtStructure",
    "SolveReport",
    "SparseMatrix",
    "StandardFormLP",
    "build_cpl",
    "detect_structure",
    "dualize",
    "from_dense",
    "from_triplets",
    "gen_preset",
    "gen_radiotherapy",
    "instance_from_json",
    "instance_to_json",
    "parse_mps",
    "solve",
    "to_standard_form",
    "validate_structure",
    "__version__",
]
