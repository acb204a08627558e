"""Structured-text reports.

A report is UTF-8 text made of sections. The first section is untitled and
holds ``key: value`` metadata; later sections start with ``[name]`` and are
either more ``key: value`` lines or a table (a comma-separated header line
followed by rows). Sections are separated by a blank line. Floats use the
shortest round-trip representation, and nothing time-dependent is written,
so equal inputs give byte-identical reports.

Fields written by the CLI:

``schema_version``
    Integer, bumped on any incompatible layout change.
``command``
    The subcommand that produced the report.
``config_hash``
    SHA-256 of the canonical run configuration (file paths excluded).
``seed``, ``seed.narx``, ``seed.lstm``, ``seed.search``, ``seed.synth``
    The global seed, the seeds derived from it, and the generator seed.
``data.rows``, ``data.first_timestamp``, ``data.last_timestamp``, ``data.step_seconds``
    Extent of the input data, timestamps in epoch seconds.
``[metrics]``
    ``rmse``, ``mae`` (watts), ``mape`` (percent over non-zero actuals),
    ``n`` scored steps, ``n_zero_skipped`` zero-actual steps left out of MAPE.
``[cv]``
    Table ``fold,start,stop,rmse,mae,mape`` followed by a ``mean`` row.
``[comparison]``
    Table ``model,rmse,mae,mape,status``; then ``[comparison.summary]``
    with ``best``, ``runner_up`` and ``improvement_pct``.
``[predictions]``
    Table ``timestamp,actual,predicted``.
"""

import math

SCHEMA_VERSION = 1


def fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float) or hasattr(v, "dtype"):
        f = float(v)
        if math.isnan(f):
            return "nan"
        return repr(f)
    return str(v)


class Report:
    def __init__(self):
        self._sections = [(None, "kv", [])]

    def put(self, key, value):
        name, kind, items = self._sections[-1]
        if kind != "kv":
            raise ValueError("current section is a table")
        items.append((key, value))
        return self

    def section(self, name):
        self._sections.append((name, "kv", []))
        return self

    def table(self, name, header, rows):
        self._sections.append((name, "table", [tuple(header)] + [tuple(r) for r in rows]))
        return self

    def render(self) -> str:
        blocks = []
        for name, kind, items in self._sections:
            lines = [] if name is None else [f"[{name}]"]
            if kind == "kv":
                lines += [f"{k}: {fmt(v)}" for k, v in items]
            else:
                lines += [",".join(fmt(c) for c in row) for row in items]
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.render())


def parse_report(text):
    """Inverse of :meth:`Report.render` with every value left as a string.

    Returns ``{section: dict or list-of-rows}``; the metadata section is
    stored under ``""``. A section whose first line contains a comma and no
    ``": "`` is read as a table.
    """
    out = {}
    for block in text.strip("\n").split("\n\n"):
        lines = block.split("\n")
        name = ""
        if lines and lines[0].startswith("[") and lines[0].endswith("]"):
            name, lines = lines[0][1:-1], lines[1:]
        if lines and ": " not in lines[0] and "," in lines[0]:
            out[name] = [ln.split(",") for ln in lines]
        else:
            out[name] = dict(ln.split(": ", 1) if ": " in ln else (ln.rstrip(":"), "") for ln in lines)
    return out


def metadata(report: Report, command, cfg, data=None):
    """Standard header: schema, command, config hash, seeds, data extent."""
    seeds = cfg.seeds
    report.put("schema_version", SCHEMA_VERSION)
    report.put("command", command)
    report.put("config_hash", cfg.config_hash())
    report.put("seed", cfg.seed)
    report.put("seed.narx", seeds.narx)
    report.put("seed.lstm", seeds.lstm)
    report.put("seed.search", seeds.search)
    report.put("seed.synth", cfg.plant.noise_seed)
    if data is not None:
        report.put("data.rows", len(data))
        report.put("data.first_timestamp", int(data.timestamps[0]))
        report.put("data.last_timestamp", int(data.timestamps[-1]))
        report.put("data.step_seconds", int(data.step_seconds))
    return report


def add_metrics(report: Report, m, name="metrics"):
    report.section(name)
    for k in ("rmse", "mae", "mape", "n", "n_zero_skipped"):
        report.put(k, getattr(m, k))
    return report
