from .batch import (
    ContrastiveBatch,
    NegativeSet,
    batch_seed,
    build_contrastive_batch,
    build_negative_set,
    build_positive_set,
    unique_items,
)
from .losses import (
    bpr_batch_loss,
    bpr_loss,
    contrastive_loss,
    logits,
    mince_loss,
    mince_per_target,
    nce_loss,
    nce_per_target,
    sample_bpr_negatives,
)
