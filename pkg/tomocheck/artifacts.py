"""Stage files written and read by the CLI."""
import csv
import json
import logging
from pathlib import Path

import numpy as np
from jinja2 import Environment, FileSystemLoader, StrictUndefined

from tomocheck.errors import MissingDataError, SchemaVersionError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TEMPLATE_DIR = Path(__file__).parent / "templates"


class ReportJSONEncoder(json.JSONEncoder):
    '''
    JSON encoder for the numpy and complex values that flow through reports
    '''

    def default(self, o):
        '''
        Returns JSON-valid representation for numpy scalars/arrays, complex
        numbers, tuples-as-keys containers and objects exposing ``to_dict``
        '''
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, (complex, np.complexfloating)):
            return {"re": float(o.real), "im": float(o.imag)}
        if hasattr(o, "to_dict"):
            return o.to_dict()
        return super().default(o)


def write_json(path, kind: str, payload: dict) -> Path:
    """Write ``payload`` with ``schema_version`` and ``kind`` in front, indent=4."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"schema_version": SCHEMA_VERSION, "kind": kind, **payload}
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(document, handle, indent=4, cls=ReportJSONEncoder)
        handle.write("\n")
    logger.info(f"Wrote {kind} to {path}")
    return path


def read_json(path, kind: str = None) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            document = json.load(handle)
    except (OSError, ValueError) as e:
        raise MissingDataError(f"Cannot read {path}: {e}")
    version = document.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"{path} has schema_version {version!r}, expected {SCHEMA_VERSION}")
    if kind is not None and document.get("kind") not in (kind, None):
        raise SchemaVersionError(f"{path} holds '{document.get('kind')}', expected '{kind}'")
    return document


def write_joint_csv(path, joint) -> Path:
    """Long-format CSV ``x1,x2,w`` of a gridded joint tomogram."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["x1", "x2", "w"])
        for i, x1 in enumerate(joint.x1):
            for j, x2 in enumerate(joint.x2):
                writer.writerow([repr(float(x1)), repr(float(x2)), repr(float(joint.density[i, j]))])
    return path


def render_summary(report: dict, template: str = "report.md.j2") -> str:
    """Markdown summary of a report document."""
    env = Environment(loader=FileSystemLoader(str(TEMPLATE_DIR)), undefined=StrictUndefined,
                      trim_blocks=True, lstrip_blocks=True, keep_trailing_newline=True)
    env.filters["fmt"] = lambda value, spec=".4g": format(value, spec)
    return env.get_template(template).render(report=report)
