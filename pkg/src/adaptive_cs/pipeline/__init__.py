"""Background-subtraction pipeline, synthetic data, phase harness and CLI."""

from .bgsub import BgsubResult, RunConfig, run_bgsub
from .pgm import PGMError, load_sequence, read_pgm, write_pgm
from .records import CSV_HEADER, FrameMetrics, read_csv, write_csv
from .synthetic import SyntheticSequence, SyntheticSpec, generate_synthetic

__all__ = [
    "BgsubResult", "CSV_HEADER", "FrameMetrics", "PGMError", "RunConfig",
    "SyntheticSequence", "SyntheticSpec", "generate_synthetic", "load_sequence",
    "read_csv", "read_pgm", "run_bgsub", "write_csv", "write_pgm",
]
