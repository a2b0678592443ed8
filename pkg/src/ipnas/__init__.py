"""Variable-length CNN architecture search by particle swarm optimization.

Layers are encoded as 2-byte addresses inside four layer-type subnets, so a
fixed-length particle can express architectures of varying depth through a
disabled subnet.  The package bundles the codec, the swarm engine, a small
from-scratch CNN for live fitness evaluation, dataset ingestion, and a CLI
with trajectory/PCA exports.
"""

from .codec import (
    Architecture,
    ConvSpec,
    DisabledSpec,
    FcSpec,
    InterfaceAddress,
    LayerKind,
    PoolSpec,
    PoolType,
    Subnet,
    decode_address,
    decode_particle_position,
    encode_layer,
    format_architecture,
    format_layer,
    subnet_of,
)
from .config import RunConfig, load_config, parse_config_text
from .dataset import LabeledDataset, SplitSpec, load_csv, load_idx, save_idx, split
from .fitness import (
    EvalProtocolConfig,
    FitnessEvaluator,
    SurrogateEvaluator,
    SurrogateLandscape,
    TrainingEvaluator,
    evaluate_by_training,
    surrogate_evaluate,
)
from .particle import Particle, PsoCoefficients, update_position, update_velocity
from .swarm import (
    SearchResult,
    SlotConstraints,
    SwarmConfig,
    allowed_subnets,
    init_population,
    run,
)

__version__ = "0.1.0"
