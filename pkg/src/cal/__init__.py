"""Concentration-of-measure calculators for adversarial robustness.

Finite product spaces with exact measure arithmetic, concentration
profiles (exact, closed-form, and empirical), evasion risk/robustness
with certificates, prediction-change analogues, plausible training-set
poisoning against toy learners, and a seeded reproducibility harness.
"""

from ._backend import HAS_COMPILED, backend_name
from .concentration import (
    EXACT_SCAN_MAX_POINTS,
    ConcentrationProfile,
    LevyParams,
    McdiarmidReport,
    candidate_family,
    empirical_alpha,
    empirical_profile,
    exact_alpha,
    exact_alpha_profile,
    hypercube_levy_params,
    levy_profile,
    mcdiarmid_check,
    scan_all_subsets,
    talagrand_profile,
)
from .errors import (
    CalError,
    ConfigError,
    DistanceCapExceededError,
    FailureSetEmptyError,
    NoCertificateError,
    NoPartitionError,
    NoValidCandidateError,
    RhoUnachievableError,
    SpaceError,
    SpaceTooLargeError,
    UnsupportedSetShapeError,
)
from .evasion import (
    CertificateFlags,
    ClassifierPair,
    LevyAttackBounds,
    RiskCurve,
    RiskPoint,
    RobustnessReport,
    adv_risk,
    as_error_region,
    error_region,
    find_adversarial_example,
    levy_attack_bounds,
    risk,
    risk_certificate,
    risk_curve,
    rob_greedy_oracle,
    rob_target,
    rob_upper_bound,
)
from .harness import (
    CONFIG_SCHEMA,
    VERSION,
    ExperimentConfig,
    RunManifest,
    RunReport,
    config_hash,
    load_config,
    resolve_config,
    validate_config,
)
from .harness import plan as plan_experiment
from .harness import run as run_experiment
from .learners import (
    LabeledExample,
    Learner,
    TrainingSet,
    all_training_sets,
    interval_learner,
    label_all,
    majority_learner,
    nn_learner,
)
from .pc import (
    PcCertificatePart,
    PcCertificates,
    label_masses,
    label_regions,
    levy_pc_thresholds,
    pc_certificates,
    pc_risk,
    pc_rob,
    split_labels_for_attack,
    target_label_risk,
    target_label_rob,
)
from .poisoning import (
    Estimate,
    FailurePredicate,
    MeanDistanceReport,
    PoisonReport,
    attack_average,
    attack_budget,
    average_adversary,
    avg_budget_formula,
    baseline_failure_rate,
    budget_adversary,
    budget_formula,
    budget_formula_variants,
    chosen_budget_formula,
    conf_estimate,
    conf_exact,
    custom_failure,
    distance_to_failure,
    err_estimate,
    err_exact,
    failure_mask,
    identity_adversary,
    mean_distance_check,
    mean_failure_distance,
    misclassifies,
    risk_exceeds,
    training_space,
)
from .rng import stream
from .spaces import (
    ENUMERATION_CAP,
    EUCLIDEAN,
    HAMMING,
    NORMALIZED_HAMMING,
    EuclideanBall,
    EventSet,
    ExplicitSpace,
    GaussianSpace,
    Halfspace,
    HammingBall,
    Junta,
    MeasureEstimate,
    ProductSpace,
    SetStructure,
    Space,
    SymmetricGroupSpace,
    ball,
    build_explicit,
    build_gaussian,
    build_hypercube,
    build_product,
    build_sym_group,
    distance_to_set,
    expand,
    measure,
    nearest_in_set,
    set_distances,
    set_from_json,
    set_to_json,
    space_from_json,
    space_to_json,
)
from .verify import SUITE_NAMES, SuiteResult, run_all, run_suite

__version__ = VERSION
