from .catalog import (
    CATALOG_ENV,
    CatalogEntry,
    CatalogError,
    Integral,
    builtin_catalog,
    catalog_dir_entries,
    entry_from_dict,
    find_entry,
    full_catalog,
    load_entry_file,
)
from .fitting import FitConfig, FitError, FitResult, fit_constants, reconstruct, rule_jets, total_derivative
from .rule import KINDS, RuleError, SuperpositionRule, project_hode_rule
from .verify import (
    CharResidual,
    DriftReport,
    VerificationReport,
    VerifyConfig,
    char_residual,
    char_residual_exprs,
    check_first_integral_conservation,
    check_XL_annihilates,
    integral_annihilation,
    reconstruction_series,
    rule_char_residual,
    verify_superposition,
)

__all__ = [name for name in dir() if not name.startswith("_")]
