import csv
from datetime import datetime, timezone
from pathlib import Path

import orjson
from jsonschema import Draft202012Validator

from engine.errors import YBError
from services.logging_service import get_logger


SCHEMA_VERSION = "1"

JSON_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY

TRAJECTORY_HEADER = ("step", "site", "coord", "re", "im")

SURFACE_HEADER = ("alpha0", "alpha1", "alpha2", "residual")


_VECTOR = {
    "type": "object",
    "required": ["re", "im"],
    "properties": {
        "re": {"type": "array", "items": {"type": "number"}},
        "im": {"type": "array", "items": {"type": "number"}}
    }
}

_CHECK = {
    "type": "object",
    "required": ["tolerance", "samples", "rejected", "passed"],
    "properties": {
        "max_residual": {"type": ["number", "null"]},
        "min_ratio": {"type": ["number", "null"]},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "samples": {"type": "integer", "minimum": 1},
        "rejected": {"type": "integer", "minimum": 0},
        "passed": {"type": "boolean"}
    }
}

_BASE = {
    "schema": {"const": SCHEMA_VERSION},
    "timestamp": {"type": "string"}
}

SCHEMAS = {
    "verify": {
        "type": "object",
        "required": ["schema", "timestamp", "command", "map", "seed", "samples", "tolerances", "checks", "passed"],
        "properties": {
            **_BASE,
            "command": {"const": "verify"},
            "map": {"type": "string"},
            "seed": {"type": "integer"},
            "samples": {"type": "integer", "minimum": 1},
            "tolerances": {"type": "object", "additionalProperties": {"type": "number", "exclusiveMinimum": 0}},
            "checks": {"type": "object", "additionalProperties": _CHECK},
            "passed": {"type": "boolean"}
        }
    },
    "evaluate": {
        "type": "object",
        "required": ["schema", "timestamp", "command", "map", "x", "y", "alpha", "beta", "u", "v"],
        "properties": {
            **_BASE,
            "command": {"const": "evaluate"},
            "map": {"type": "string"},
            "seed": {"type": "integer"},
            "x": _VECTOR,
            "y": _VECTOR,
            "alpha": _VECTOR,
            "beta": _VECTOR,
            "u": _VECTOR,
            "v": _VECTOR
        }
    },
    "lattice": {
        "type": "object",
        "required": ["schema", "timestamp", "command", "map", "steps", "max_coeff_drift", "j1_drift", "j2_drift"],
        "properties": {
            **_BASE,
            "command": {"const": "lattice"},
            "map": {"type": "string"},
            "seed": {"type": "integer"},
            "steps": {"type": "integer", "minimum": 0},
            "max_coeff_drift": {"type": "number"},
            "j1_drift": {"type": ["number", "null"]},
            "j2_drift": {"type": ["number", "null"]},
            "drift_slope": {"type": "number"},
            "tolerance": {"type": "number"},
            "passed": {"type": "boolean"}
        }
    },
    "error": {
        "type": "object",
        "required": ["schema", "timestamp", "error"],
        "properties": {
            **_BASE,
            "error": {
                "type": "object",
                "required": ["type", "message", "details"],
                "properties": {
                    "type": {"type": "string"},
                    "message": {"type": "string"},
                    "details": {"type": "object"}
                }
            }
        }
    }
}


class ReportError(YBError):
    pass


class ReportService:

    def __init__(self, clock=None):

        self.logger = get_logger()
        self.clock = clock or (lambda: datetime.now(timezone.utc).isoformat())

    # -------- JSON --------

    def render(self, kind, document):

        if kind not in SCHEMAS:
            raise ReportError(f"unknown report kind {kind!r}")

        stamped = {**document, "schema": SCHEMA_VERSION, "timestamp": self.clock()}

        # orjson round-trip turns numpy scalars into plain JSON values before validation
        payload = orjson.dumps(stamped, default=str, option=JSON_OPTIONS)
        errors = sorted(Draft202012Validator(SCHEMAS[kind]).iter_errors(orjson.loads(payload)), key=str)

        if errors:
            self.logger.log("REPORT_SCHEMA_ERROR", {"kind": kind, "errors": [e.message for e in errors]})
            raise ReportError(f"{kind} report does not match its schema", {
                "errors": [e.message for e in errors]
            })

        return payload + b"\n"

    def write_json(self, kind, document, path):

        payload = self.render(kind, document)

        self._write(path, payload, kind)

        return payload

    # -------- CSV --------

    def write_trajectory(self, trajectory, coord_names, path):

        rows = []

        for step, state in enumerate(trajectory):
            for label, sites in (("x", state.x_sites), ("y", state.y_sites)):
                for k, site in enumerate(sites, start=1):
                    for name, value in zip(coord_names, site.coords):
                        rows.append((step, f"{label}{k}", name, repr(float(value.real)), repr(float(value.imag))))

        return self._write_csv(path, TRAJECTORY_HEADER, rows, "trajectory")

    def write_surface(self, rows, path):

        text_rows = [tuple(repr(float(v)) for v in row) for row in rows]

        return self._write_csv(path, SURFACE_HEADER, text_rows, "surface")

    # -------- FILES --------

    def _write_csv(self, path, header, rows, kind):

        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)

        try:
            with path.open("w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle)
                writer.writerow(header)
                writer.writerows(rows)

        except OSError as e:
            self.logger.log("REPORT_WRITE_FAILED", {"kind": kind, "path": str(path), "error": str(e)})
            raise ReportError(f"could not write {kind} CSV", {"path": str(path), "error": str(e)}) from e

        self.logger.log("REPORT_WRITTEN", {"kind": kind, "path": str(path), "rows": len(rows)})

        return path

    def _write(self, path, payload, kind):

        path = Path(path)

        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(payload)

        except OSError as e:
            self.logger.log("REPORT_WRITE_FAILED", {"kind": kind, "path": str(path), "error": str(e)})
            raise ReportError(f"could not write {kind} report", {"path": str(path), "error": str(e)}) from e

        self.logger.log("REPORT_WRITTEN", {"kind": kind, "path": str(path), "bytes": len(payload)})
