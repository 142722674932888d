"""Self-describing CSV / JSON tables.

Every file opens with a header block that echoes the full run configuration
(explicit keys and applied defaults),
the physical constants and the package version, so the file can be
regenerated from its own header.  Floats are written with 17 significant
digits; rows are written in the order given (callers sort them).
"""

import json
import math

from . import __version__
from .config import config_items

CONFIG_PREFIX = "# config: "
DEFAULT_PREFIX = "# default-applied: "


def _fmt(value):
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return "%.17g" % value
    return str(value)


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def header_lines(cfg, constants, extra=None):
    lines = [f"hg-compton {__version__}"]
    # explicit keys and defaulted keys are echoed separately so the config
    # recovered from a header re-applies the same defaults
    for key, value in config_items(cfg, execution=False):
        prefix = DEFAULT_PREFIX if key in cfg.defaults_applied else CONFIG_PREFIX
        lines.append(f"{prefix}{key} = {value}")
    lines += [
        f"constant m_e_keV = {_fmt(constants.m_e)}",
        f"constant alpha = {_fmt(constants.alpha)}",
        f"constant hbar_c_keV_pm = {_fmt(constants.hbar_c)}",
    ]
    for key, value in (extra or {}).items():
        lines.append(f"{key} = {_fmt(value)}")
    return lines


def write_table(path, fmt, cfg, constants, columns, rows, extra=None):
    header = header_lines(cfg, constants, extra)
    if fmt == "json":
        doc = {
            "header": header,
            "columns": list(columns),
            "rows": [[_json_value(v) for v in row] for row in rows],
        }
        text = json.dumps(doc, indent=1, sort_keys=True, allow_nan=False) + "\n"
    else:
        out = [line if line.startswith("#") else "# " + line for line in header]
        out.append(",".join(columns))
        out += [",".join(_fmt(v) for v in row) for row in rows]
        text = "\n".join(out) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def config_text_from_output(path):
    """Recover the configuration document echoed in an output file header.

    Only explicitly given keys are returned; parsing the result re-applies
    the defaults listed under ``default-applied``.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        lines = json.loads(text)["header"]
    else:
        lines = text.splitlines()
    picked = [line[len(CONFIG_PREFIX):] for line in lines if line.startswith(CONFIG_PREFIX)]
    return "\n".join(picked) + "\n"
