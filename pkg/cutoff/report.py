import csv
import hashlib
import io
import json
import os
import sys
from contextlib import contextmanager
from functools import cache
from typing import NamedTuple

from . util import VERSION


@cache
def build_id():
    """Version plus a digest of the package sources, so a table names the code that produced it."""
    digest = hashlib.sha1()
    here = os.path.dirname(os.path.abspath(__file__))
    for name in sorted(os.listdir(here)):
        if name.endswith('.py'):
            with open(os.path.join(here, name), 'rb') as f:
                digest.update(name.encode())
                digest.update(f.read())
    return f'{VERSION}+{digest.hexdigest()[:12]}'


class RunRecord(NamedTuple):
    command: str
    parameters: dict
    build: str
    mode: str
    seed: int = None
    extra: dict = None

    @classmethod
    def from_settings(cls, settings, extra=None):
        command = ' '.join(['cutoff'] + settings.argv) if settings.argv is not None else settings.command
        seed = settings.seed if settings.command == 'simulate' else None
        family = {'family': settings.family} if settings.family else {}
        return cls(command, {**family, **settings.parameters()}, build_id(), settings.mode, seed, extra)

    def header(self):
        found = {'command': self.command, 'build': self.build, 'mode': self.mode, 'parameters': self.parameters}
        if self.seed is not None:
            found['seed'] = self.seed
        if self.extra:
            found.update(self.extra)
        return found


def _cell(value):
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    if hasattr(value, 'item'):
        return value.item()
    return str(value)


def format_csv(record, columns, rows, footer=None):
    lines = [f'# {key}: {json.dumps(_plain(value), sort_keys=True)}' for key, value in record.header().items()]
    out = io.StringIO()
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    lines.append(out.getvalue().rstrip('\n'))
    for key, value in (footer or {}).items():
        lines.append(f'# {key}: {json.dumps(_plain(value))}')
    return '\n'.join(lines) + '\n'


def format_json(record, columns, rows, footer=None):
    document = {
        'header': _plain(record.header()),
        'columns': list(columns),
        'rows': [dict(zip(columns, _plain(list(row)))) for row in rows],
    }
    if footer:
        document['footer'] = _plain(footer)
    return json.dumps(document, indent=2) + '\n'


@contextmanager
def _target(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, 'w', newline='') as f:
            yield f


def write_table(record, columns, rows, settings, footer=None):
    text = (format_json if settings.format == 'json' else format_csv)(record, columns, rows, footer)
    with _target(settings.out) as f:
        f.write(text)
    if settings.out:
        settings.logger.info(f'wrote {len(rows)} rows to {settings.out}')
    return text
