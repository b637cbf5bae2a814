"""simaug: similarity-based auxiliary-data augmentation and two-stage training."""

from .corpus import (
    AUXILIARY,
    MIXED,
    PRIMARY,
    DataFormatError,
    Dataset,
    Sentence,
    SplitBundle,
    class_histogram,
    deduplicate,
    filter_min_class_size,
    load_dataset,
    make_dataset,
    merge_labels,
    normalize,
    stratified_split,
)
from .encoder import (
    Encoder,
    EncodingError,
    cosine,
    encode,
    fit_hashed_encoder,
    load_embedding_file,
    write_embedding_file,
)
from .evaluator import (
    ConfusionCounts,
    EvalReport,
    SeedSummary,
    confusion,
    evaluate,
    macro_f1,
    micro_f1,
    summarize_seeds,
)
from .selector import (
    AugmentationPlan,
    Selection,
    apply_plan,
    build_plan,
    load_plan,
    oversample_same,
    oversample_swap,
    save_plan,
    select_rand_all,
    select_rand_minority,
    select_sim_all,
    select_sim_minority,
    similarity_to_class,
)
from .trainer import (
    Model,
    Schedule,
    TrainConfig,
    TrainingError,
    init_model,
    load_model,
    lr_at,
    predict,
    predict_dataset,
    save_model,
    train_stage,
    two_stage_train,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
