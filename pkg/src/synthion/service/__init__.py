from .bench import BenchReport, BenchRow, run_benchmarks, run_file
from .cli import main
from .config import load_config
