"""Numerical laboratory for Morrey norms and their predual block norms.

Grid functions on finite boxes, Morrey suprema with argmax certificates,
block-norm computation with two-sided primal/dual certificates, associate
norm identities, Hausdorff content, named counterexample families and a
randomized axiom-check harness.
"""

from .blocks import (
    Block,
    BlockNormCertificate,
    BlockNormError,
    Decomposition,
    block_norm,
    dominate_transfer,
    finite_decomposition,
    is_block,
    regroup_dyadic,
    synthesize,
)
from .duality import (
    AssociateResult,
    NormOracle,
    associate_norm,
    block_associate_norm,
    block_oracle,
    morrey_oracle,
    pairing,
    second_associate_check,
)
from .gallery import (
    StepFunction1D,
    example_functional_sequence,
    example_non_dense,
    example_p5_failure,
    morrey_norm_exact_1d,
    power_function_norm,
)
from .grid import (
    CellSet,
    Cube,
    CubeFamily,
    ExponentPair,
    GridDomain,
    GridFunction,
    enumerate_cubes,
    integrate_abs_power,
    triple,
)
from .hausdorff import (
    ContentQuery,
    IntervalSet,
    check_capacity_bound,
    check_capacity_bound_exact_1d,
    content_1d,
    content_upper_nd,
)
from .morrey import (
    MorreyResult,
    check_embedding,
    dilate,
    dilation_check,
    morrey_norm,
)
from .propcheck import (
    abs_continuity_probe,
    check_axioms,
    fatou_harness,
    simple_approx_distance,
)

__version__ = "0.1.0"
