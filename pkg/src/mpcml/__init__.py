"""Secret-shared machine learning workbench.

SPDZ-style maliciously secure multi-party arithmetic (trusted-dealer
preprocessing) driving linear-system solvers and SGD regression under
configurable fixed-point precision, plus the plaintext reference
implementations and a benchmark CLI.
"""

from .engine import SpdzEngine
from .errors import (
    ConfigurationError,
    ConnectionFailure,
    MacCheckFailure,
    PreprocessingExhausted,
    ProtocolError,
    RangeOverflowError,
    SessionAbort,
)
from .fields import PrimeField, choose_prime
from .fixedpoint import FixedPointParams, field_for_params, fx_decode, fx_encode, params_for_precision
from .preprocessing import Budget, Dealer, StreamingMaterial
from .runner import PartyContext, run_parties
from .secure_ops import FixedOps
from .shares import AuthShare, reconstruct
from .transport import LoopbackNetwork, PartyConfig, Session, TcpMeshTransport

__all__ = [
    "AuthShare",
    "Budget",
    "ConfigurationError",
    "ConnectionFailure",
    "Dealer",
    "FixedOps",
    "FixedPointParams",
    "LoopbackNetwork",
    "MacCheckFailure",
    "PartyConfig",
    "PartyContext",
    "PreprocessingExhausted",
    "PrimeField",
    "ProtocolError",
    "RangeOverflowError",
    "Session",
    "SessionAbort",
    "SpdzEngine",
    "StreamingMaterial",
    "TcpMeshTransport",
    "choose_prime",
    "field_for_params",
    "fx_decode",
    "fx_encode",
    "params_for_precision",
    "reconstruct",
    "run_parties",
]

__version__ = "0.1.0"
