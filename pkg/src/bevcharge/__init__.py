"""Bottom-up charging demand and emissions accounting for BEV fleets."""

__version__ = "0.1.0"

from .analytics import (  # noqa: E402
    Band,
    IntensityResult,
    ResultTree,
    ScaledResult,
    ScalingRatios,
    build_result_tree,
    energy_intensity,
    fleet_count,
    growth_rate,
    intensity_for,
    scale_to_population,
    uncertainty_band,
)
from .core import (  # noqa: E402
    SalesRecord,
    SeasonalConsumption,
    VehicleVersion,
    ZoneParameters,
    harsh_season_energy,
    mild_season_energy,
    model_energy,
    national_emissions,
    national_energy,
    version_annual_energy,
    zone_emissions,
    zone_energy,
)
from .dataset import FleetDataset, ValidationReport, load_dataset, validate_only  # noqa: E402
from .errors import (  # noqa: E402
    BevChargeError,
    ComputationError,
    DatasetInvalid,
    UsageError,
    ValidationError,
)
from .estimator import ChargingDemandModel, SeasonalEnergyTransformer  # noqa: E402
from .units import EmissionQuantity, EnergyQuantity  # noqa: E402


def reference_dataset_path():
    """Directory of the bundled dataset calibrated to published 2020-2022 aggregates."""
    from importlib import resources

    return resources.files(__name__).joinpath("data/reference")
