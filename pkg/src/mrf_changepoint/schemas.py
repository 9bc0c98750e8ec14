"""JSON Schemas (draft 2020-12) for the documents written by the CLI."""

_PARAMS = {
    "type": "object",
    "required": ["p", "entries"],
    "properties": {
        "p": {"type": "integer", "minimum": 1},
        "entries": {
            "type": "array",
            "items": {"type": "array", "minItems": 3, "maxItems": 3,
                      "prefixItems": [{"type": "integer"}, {"type": "integer"}, {"type": "number"}]},
        },
    },
}

_VERSION = {"const": 1}

_CURVE = {
    "type": "array",
    "items": {"type": "object", "required": ["tau", "objective"],
              "properties": {"tau": {"type": "integer"}, "objective": {"type": "number"}}},
}

_FIT = {
    "type": "object",
    "required": ["lambda", "iterations", "kkt_residual", "converged"],
    "properties": {"lambda": {"type": "number", "exclusiveMinimum": 0},
                   "iterations": {"type": "integer"}, "converged": {"type": "boolean"}},
}

_STAGE = {
    "type": ["object", "null"],
    "required": ["grid", "bandwidth", "tau_hat", "curve", "smoothed"],
    "properties": {"grid": {"type": "array", "items": {"type": "integer"}},
                   "bandwidth": {"type": "number"}, "tau_hat": {"type": "integer"},
                   "curve": _CURVE, "smoothed": _CURVE},
}

SCAN = {
    "type": "object",
    "required": ["schema_version", "method", "tau_hat", "alpha_hat", "T", "curve", "theta1",
                 "theta2", "fit1", "fit2", "penalties", "tuning", "n_profile_fits",
                 "runtime_seconds"],
    "properties": {
        "schema_version": _VERSION,
        "method": {"enum": ["basic", "fast"]},
        "tau_hat": {"type": "integer", "minimum": 1},
        "alpha_hat": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "T": {"type": "integer", "minimum": 2},
        "curve": _CURVE,
        "stage1": _STAGE,
        "stage2": _STAGE,
        "theta1": _PARAMS,
        "theta2": _PARAMS,
        "fit1": _FIT,
        "fit2": _FIT,
        "n_profile_fits": {"type": "integer", "minimum": 1},
        "runtime_seconds": {"type": "number", "minimum": 0},
    },
}

TRUTH = {
    "type": "object",
    "required": ["schema_version", "tau_star", "T", "theta1", "theta2"],
    "properties": {"schema_version": _VERSION, "tau_star": {"type": "integer"},
                   "T": {"type": "integer"}, "theta1": _PARAMS, "theta2": _PARAMS,
                   "groups": {"type": "array", "items": {"type": "string"}}},
}

_CONFUSION = {
    "type": "object",
    "required": ["tp", "fp", "tn", "fn", "sensitivity", "specificity", "relative_error"],
    "properties": {
        **{k: {"type": "integer", "minimum": 0} for k in ("tp", "fp", "tn", "fn")},
        "sensitivity": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
        "specificity": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
        "relative_error": {"type": "number", "minimum": 0},
    },
}

METRICS = {
    "type": "object",
    "required": ["schema_version", "first", "second", "relative_error_formula"],
    "properties": {"schema_version": _VERSION, "first": _CONFUSION, "second": _CONFUSION,
                   "relative_error_formula": {"const": "frobenius_ratio"}},
}

STABILITY = {
    "type": "object",
    "required": ["schema_version", "p", "n_bootstrap", "threshold", "frequencies",
                 "stable_edges"],
    "properties": {
        "schema_version": _VERSION,
        "n_bootstrap": {"type": "integer", "minimum": 1},
        "threshold": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "frequencies": {"type": "array", "items": {
            "type": "object", "required": ["j", "k", "count", "frequency"],
            "properties": {"frequency": {"type": "number", "minimum": 0, "maximum": 1}}}},
    },
}

CONFIG = {
    "type": "object",
    "required": ["schema_version", "command", "params"],
    "properties": {"schema_version": _VERSION, "command": {"type": "string"},
                   "params": {"type": "object"}},
}

BY_FILENAME = {
    "scan.json": SCAN,
    "truth.json": TRUTH,
    "metrics.json": METRICS,
    "stability.json": STABILITY,
    "config.json": CONFIG,
}
