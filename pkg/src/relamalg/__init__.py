"""Strong amalgamation of finite structures with one or two comparable binary relations."""

from .amalgamation import (
    Amalgam,
    amalgamate,
    amalgamate_pair,
    amalgamate_single,
    amalgamate_transitive,
    amalgamate_union,
    extend_operations,
    joint_embedding,
    strict_of,
    superamalgamation_witnesses,
)
from .core import (
    ANTIREFLEXIVE,
    ANTISYMMETRIC,
    PROPERTIES,
    REFLEXIVE,
    SYMMETRIC,
    TRANSITIVE,
    Embedding,
    OperationSpec,
    Signature,
    Structure,
    TbaTriple,
    VerificationReport,
    check_conformance,
    empty_structure,
    find_isomorphism,
    induced_substructure,
    is_isomorphic,
    validate_tba,
)
from .errors import *  # noqa: F401,F403
from .oracle import SearchOutcome, search_ap_amalgam, search_order_expansion, search_strong_amalgam

__version__ = "0.1.0"
