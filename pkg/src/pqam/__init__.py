"""Gate-level simulator of a probabilistic quantum associative memory."""
from .errors import InvalidInput, NumericalError, QamError
from .patterns import PatternSet, load_patterns, parse_patterns
from .query import DistributionReport, Query, RecognitionResult, RetrievalOutcome
from .retrieval import (choose_threshold, control_probabilities, gate_level_report, recognize,
                        retrieve_once, run_circuit, run_experiment,
                        worst_case_threshold_scaling)
from .oracle import analytic_report, hamming, worst_case_set
from .storage import store, verify_memory

__version__ = "0.1.0"
