"""Credit-scoring models trained under simultaneous bias objectives."""

from .datasets import (
    Dataset,
    DatasetSchema,
    GroupOutcomeTable,
    load_dataset,
    load_schema,
    split,
    standardize,
    subsample,
    summarize,
)
from .experiments import (
    BiasSpec,
    aggregate,
    dual_dm_study,
    marginal_impact,
    run_multi_attribute_study,
    run_single_attribute_study,
    run_study,
)
from .metrics import BiasMeasureId, bias_measure, bias_vector, confusion_by_group
from .model import LinearModel, TrainConfig, predict, train_logistic_baseline
from .moea import EAConfig, ParetoArchive, dominates, nondominated_sort
from .hypervolume import hypervolume, hypervolume_contribution

__version__ = "0.1.0"
