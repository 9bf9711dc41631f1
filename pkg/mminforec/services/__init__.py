from .optim import AdamState, adam_step
from .train_service import EpochRecord, TrainConfig, TrainResult, TrainService
from .ablation_service import AblationService, AblationSpec, cell_config, cell_name
from .diagnostics_service import DiagnosticsService, GroupReport, failing_groups, tiny_problem
