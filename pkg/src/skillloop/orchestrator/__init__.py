"""Loop orchestration, mode comparison and the command-line interface."""
from .compare import compare_modes, format_table, plot_comparison, read_table, write_table
from .config import (
    EF_NO_FEEDBACK,
    EXIF,
    MODES,
    PF_BASELINE,
    SELF_PLAY,
    ConfigError,
    RunConfig,
    load_config,
)
from .loop import LockError, Run, StageError, run_loop, verify_report
