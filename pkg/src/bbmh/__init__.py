"""b-bit minwise hashing with linear-kernel feature expansion, plus
count-min / signed-sum / random-projection sketches, exact oracles for
every estimator law, and an SGD pipeline for learning on the hashed
representations."""

from .errors import (
    BbmhError,
    DatasetFormatError,
    EmptySetError,
    IncompatibleSignatureError,
    IncompatibleSketchError,
    ModelFormatError,
    OracleCapacityError,
    UndefinedRatioError,
)
from .estimators import (
    BbitConstants,
    PairStats,
    bbit_constants,
    clamp_resemblance,
    estimate_resemblance_bbit,
    estimate_resemblance_minwise,
    variance_bbit,
    variance_bbit_vw,
    variance_minwise,
)
from .expansion import ExpandedVector, expand, expand_then_sketch, gram_matrix, inner
from .hashing import (
    BbitSignature,
    HashFamily,
    MinhashSignature,
    SparseSet,
    build_family,
    derive_seed,
    match_count,
    minhash,
    mix64,
    truncate_bits,
)
from .learning import Dataset, LinearModel, TrainConfig, accuracy, predict_labels, train
from .sketches import (
    SignDistribution,
    SketchVector,
    SparseVector,
    cm_sketch,
    estimate_inner,
    rp_sketch,
    vw_sketch,
)

__version__ = "0.1.0"
