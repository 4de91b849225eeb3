"""Polar coding for compound multiple-access channels and interference networks."""

__version__ = "0.1.0"

from .channels import (  # noqa: F401
    DimensionError,
    DiscreteChannel,
    ErasureChannel,
    InputDistribution,
    KernelSizeError,
    UnsupportedChannelError,
    bhattacharyya,
    coded_time_sharing_transform,
    joint_distribution,
    minus_combine,
    mutual_information,
    plus_combine,
    symmetric_capacity,
)
from .erasure import (  # noqa: F401
    ParityLinkedErasureMAC,
    bec_bit_channel_eps,
    bec_tree_bit_channel_eps,
    polar_transform_bits,
)
from .polar import (  # noqa: F401
    BitChannelStat,
    EstimatorConfig,
    IndexClassification,
    classify,
    polar_encode,
    synthesize_p2p,
)
from .chains import (  # noqa: F401
    KUserSplit,
    MonotonePath,
    NotFoundError,
    PathRateProfile,
    PreconditionError,
    find_k_user_split,
    find_two_user_split,
    path_rates,
    scale_path,
    sum_capacity,
    two_user_path,
)
from .alignment import (  # noqa: F401
    AlignmentSchedule,
    CombinePair,
    ScheduleError,
    align_decode,
    align_encode,
    build_schedule,
    combined_eps,
    decoding_dag,
    decoding_order,
    incompatible_fraction,
    pair_indices,
    validate_successive_decodability,
)
from .regions import (  # noqa: F401
    RatePolytope,
    Region2D,
    RegionError,
    corner_points,
    dominant_face,
    fourier_motzkin,
    hk_region,
    intersect,
    mac_region,
    strong_interference_check,
    superposition_regions,
)
from .codec import (  # noqa: F401
    CompoundCodeSpec,
    ReceiverSpec,
    TransmissionRecord,
    build_code,
    encode,
    sc_decode,
    simulate,
    theorem1_check,
    transmit,
)
