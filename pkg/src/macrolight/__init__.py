"""macrolight: exact macrorealism witnesses for polarized light.

Computes outcome probabilities of up to three cascaded
photon-subtraction polarization measurements on two-mode Fock inputs,
dichotomizes the detector counts, and extremizes Leggett-Garg and
no-signaling-in-time witnesses over the analyzer angles.
"""

from .numerics import (
    CapacityError,
    LogFactorialTable,
    SignedLog,
    log_binomial,
    log_factorial,
    signed_product,
    signed_sum,
)
from .cascade import (
    FockInput,
    Outcome,
    PortConfig,
    PostState,
    amplitude_first,
    amplitude_second,
    amplitude_third,
    prob_one_port,
    prob_three_port,
    prob_two_port,
)
from .events import (
    EventLabel,
    Scheme,
    accepted_outcomes,
    classify,
    event_prob_one,
    event_prob_three,
    event_prob_two,
    parse_scheme,
    render_scheme,
)
from .witnesses import (
    AngleGrid,
    EmptyPostSelection,
    NotEnoughPhotons,
    PROBABILITY_FLOOR,
    WitnessReport,
    bhattacharyya,
    correlation,
    kmax,
    lgi_k,
    nsit_dists_two,
    v12,
    v123,
)
from .oracle import (
    ORACLE_MAX_PHOTONS,
    DenseTwoModeState,
    from_fock,
    oracle_port,
    oracle_sequence,
    port_outcome_map,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "CapacityError",
    "LogFactorialTable",
    "SignedLog",
    "log_binomial",
    "log_factorial",
    "signed_product",
    "signed_sum",
    "FockInput",
    "Outcome",
    "PortConfig",
    "PostState",
    "amplitude_first",
    "amplitude_second",
    "amplitude_third",
    "prob_one_port",
    "prob_two_port",
    "prob_three_port",
    "EventLabel",
    "Scheme",
    "accepted_outcomes",
    "classify",
    "event_prob_one",
    "event_prob_two",
    "event_prob_three",
    "parse_scheme",
    "render_scheme",
    "AngleGrid",
    "EmptyPostSelection",
    "NotEnoughPhotons",
    "PROBABILITY_FLOOR",
    "WitnessReport",
    "bhattacharyya",
    "correlation",
    "kmax",
    "lgi_k",
    "nsit_dists_two",
    "v12",
    "v123",
    "ORACLE_MAX_PHOTONS",
    "DenseTwoModeState",
    "from_fock",
    "oracle_port",
    "oracle_sequence",
    "port_outcome_map",
]
