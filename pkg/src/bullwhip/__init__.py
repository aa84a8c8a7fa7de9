"""Bullwhip effect in supply networks: simulation, spectral analysis, and validation."""
from .demand import DemandKind, DemandModel, HyperPrior, derive_seed, generate
from .dynamics import SimulationTrace, simulate, simulate_many
from .markov import AmplificationMatrix, DivergenceError, amplification_matrix, node_to_node_bwe
from .metrics import BweReport, layer_bwe_empirical, node_bwe_empirical, rmse
from .network import (
    LayerAssignment,
    StructureKind,
    StructureSpec,
    SupplyNetwork,
    assign_layers,
    custom_network,
    generate_structure,
    markov_partition,
)
from .spectral import (
    PolicyParams,
    SpectralProfile,
    amplification_rate,
    dft_amplitudes,
    layer_bwe_analytical,
    layer_bwe_with_trend,
    transfer_gain,
)

__version__ = "0.1.0"
