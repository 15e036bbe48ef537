"""Computable bounds on the optimal success probability of quantum state discrimination."""

from .inconclusive import IncParams, IncReport, pclip, pcuip, pi_a_povm, s_of_a, tau
from .io import SchemaError, load_povm, load_state_set, save_povm, save_state_set
from .minerr import (
    BoundReport,
    attainability_certificate,
    dual_iterates,
    minerr_bounds,
    pclp,
    pcup,
    pcup_prime,
    qiu_bound,
    srm,
    staircase_povm,
)
from .oracle import OracleCertificate, OracleNotConverged, inc_oracle, minerr_oracle
from .states import Povm, StateSet, gram, probabilities, random_state_set, validate

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "IncParams",
    "IncReport",
    "OracleCertificate",
    "OracleNotConverged",
    "Povm",
    "SchemaError",
    "StateSet",
    "attainability_certificate",
    "dual_iterates",
    "gram",
    "inc_oracle",
    "load_povm",
    "load_state_set",
    "minerr_bounds",
    "minerr_oracle",
    "pclip",
    "pclp",
    "pcuip",
    "pcup",
    "pcup_prime",
    "pi_a_povm",
    "probabilities",
    "qiu_bound",
    "random_state_set",
    "s_of_a",
    "save_povm",
    "save_state_set",
    "srm",
    "staircase_povm",
    "tau",
    "validate",
]
