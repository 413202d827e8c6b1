from .base import Checker, ExternalValidator, FunctionChecker, normalize_ws
from .core import (
    check_acrow,
    check_capseg,
    check_eqa,
    check_ftime,
    check_mcq,
    check_mtt,
    check_ner,
    check_parse,
    parse_single_trigger,
)
from .external import (
    DEFAULT_XDL_SCHEMA,
    StructuralXdlValidator,
    ToyTextEnv,
    check_agent,
    check_xdl,
    parse_actions_config,
    parse_xdl_schema,
)
from .registry import CheckerRegistry, build_registry, registry_lookup

__all__ = [
    "Checker",
    "CheckerRegistry",
    "DEFAULT_XDL_SCHEMA",
    "ExternalValidator",
    "FunctionChecker",
    "StructuralXdlValidator",
    "ToyTextEnv",
    "build_registry",
    "check_acrow",
    "check_agent",
    "check_capseg",
    "check_eqa",
    "check_ftime",
    "check_mcq",
    "check_mtt",
    "check_ner",
    "check_parse",
    "check_xdl",
    "normalize_ws",
    "parse_actions_config",
    "parse_single_trigger",
    "parse_xdl_schema",
    "registry_lookup",
]
