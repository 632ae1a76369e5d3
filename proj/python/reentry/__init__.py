"""Re-entrancy detection for EVM runtime bytecode."""

import json

from ._core import (
    IngestError,
    Indeterminate,
    analyze_json,
    disassemble,
    extract_functions,
    extraction_dot,
    fetch_code,
    load_hex,
    parse_hex,
    selector_of,
)

__all__ = [
    "IngestError",
    "Indeterminate",
    "analyze",
    "analyze_file",
    "disassemble",
    "exit_code",
    "extract_functions",
    "extraction_dot",
    "fetch_code",
    "load_hex",
    "parse_hex",
    "selector_of",
]


def analyze(targets, **options):
    """Analyze a list of (label, code) pairs; returns the report as a dict."""
    return json.loads(analyze_json(list(targets), **options))


def analyze_file(path, label=None, **options):
    code, _ = load_hex(str(path))
    if label is None:
        import os

        label = os.path.splitext(os.path.basename(str(path)))[0]
    return analyze([(label, code)], **options)


def exit_code(report):
    """0 all benign, 1 anything vulnerable, 2 anything inconclusive or failed."""
    return report["exit_code"]
