"""Remote field sensing with sequential last-site measurements on a Heisenberg spin chain."""

from .errors import DegeneratePosteriorError, DomainError, NumericalError
from .inference import FieldGrid, Posterior, average_error, error_summary, posterior
from .protocol import Dataset, Outcome, Schedule, generate_dataset, run_sequence, sequence_probability
from .scaling import TimeBudget, extract_scaling, fit_loglog, matched_samples, total_time
from .spin import ChainSpec, build_hamiltonian, magnetization, pauli_at

__version__ = "0.1.0"
