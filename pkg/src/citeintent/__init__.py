"""One-vs-all stacked ensemble for citation intent classification.

The package splits a K-class task into K binary tasks, trains a heterogeneous
expert pair per class, concatenates the experts' positive probabilities into a
z-vector, and aggregates with voting rules, fitted weights, per-class stacking
heads or a feedforward meta-classifier. Exact attribution tooling explains
both levels, and a thresholded service maps predictions to CiTO properties.
"""

from .corpus import (
    ACL_ARC,
    CITO_FALLBACK_IRI,
    SCICITE,
    BinaryDataset,
    CitationInstance,
    CorpusError,
    FormattedInput,
    LabelSchema,
    builtin_schema,
    cito_for,
    format_input,
    format_text,
    load_dataset,
    load_schema,
    ova_binarize,
    save_dataset,
    save_schema,
    split_of,
)
from .experts import BinaryExpert, HashedTextFeaturizer, predict, token_attributions, train_expert
from .explain import (
    AttributionMass,
    MassStatistics,
    ShapleyReport,
    attribution_mass,
    exact_shapley,
    explain_instance_report,
    mass_statistics,
)
from .instability import InstabilityReport, instability_run
from .meta import (
    FFNNParams,
    KNNHead,
    LRHead,
    MetaPrediction,
    ffnn_gradients,
    ffnn_predict,
    knn_predict,
    lr_predict,
    train_ffnn,
    train_knn_head,
    train_lr_head,
)
from .metrics import ConfusionMatrix, MetricsReport, confusion, metrics
from .pipeline import (
    EnsembleBundle,
    extract_z,
    load_bundle,
    load_expert_bundle,
    save_bundle,
    save_expert_bundle,
    train_ensemble,
)
from .service import BundlePair, build_app, classify
from .training import Checkpoint, TrainConfig, TrainingHistory
from .voting import assemble_z, avg_vote, majority_vote, max_vote
from .weighting import (
    ClassWeights,
    StackingHead,
    apply_weights,
    fit_geometric_weights,
    fit_stackingc,
    stackingc_predict,
    weighting_diagnostics,
)

__version__ = "0.1.0"
