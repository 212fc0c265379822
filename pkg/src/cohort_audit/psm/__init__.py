from .balance import BalanceReport, BalanceRow, UnknownId, balance, smd
from .matching import EmptyPool, InvalidK, MatchedCohort, match_arrays, match_one_to_k
from .propensity import (
    PropensityModel,
    SeparationDetected,
    SingleClass,
    SingularDesign,
    fit_logistic,
    fit_propensity,
)
from .signature import RatioSignature, detect_ratio_signature

__all__ = [
    "BalanceReport", "BalanceRow", "EmptyPool", "InvalidK", "MatchedCohort", "PropensityModel",
    "RatioSignature", "SeparationDetected", "SingleClass", "SingularDesign", "UnknownId",
    "balance", "detect_ratio_signature", "fit_logistic", "fit_propensity", "match_arrays",
    "match_one_to_k", "smd",
]
