from .config import LOSS_VARIANTS, MEMORY_VARIANTS, SCORE_SOURCES, ModelConfig
from .params import GROUPS, ModelParams, group_of, init_params
from .network import MMInfoRec
from .checkpoint import CheckpointRepo
