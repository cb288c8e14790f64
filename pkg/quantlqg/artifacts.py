"""
Files exchanged between pipeline stages.

Matrices are written row-major with explicit dimensions as
{"rows": r, "cols": c, "data": [...]}. JSON is written with sorted keys and
two-space indent, so reruns give identical bytes. Every output carries the
hash of the run manifest that produced it.
"""

import csv
import dataclasses
import hashlib
import importlib.metadata
import json
import logging
import os

import numpy as np
import yaml

from .errors import MalformedFieldError, MissingArtifactError
from .innovation import InnovationStatistics
from .model import validate_scenario
from .quantizer import CellMomentTable, parse_bank
from .settings import DEFAULT_SETTINGS
from .synthesis import RiccatiSolution
from .utils import frozen

logger = logging.getLogger(__name__)

RICCATI_FILE = 'riccati.json'
STATS_FILE = 'innovation_stats.json'
MOMENTS_FILE = 'moment_tables.json'
SCENARIO_FILE = 'scenario.json'
BANK_FILE = 'bank.json'
SCHEDULE_FILE = 'schedule.csv'
TABLE_FILE = 'selection_table.csv'
LP_FILE = 'milp.lp'
REPORT_FILE = 'report.json'


def tool_version():
    """Returns the installed package version."""
    try:
        return importlib.metadata.version('quantlqg')
    except importlib.metadata.PackageNotFoundError:
        return '0+unknown'


@dataclasses.dataclass(frozen=True)
class RunManifest:
    """Provenance of one command run.

    Args:
        command (str): The subcommand name.
        scenario (str): The scenario path.
        bank (str): The quantizer-bank path.
        parameters (dict): The remaining command parameters.
        version (str): The tool version.
        master_seed (int): The master seed, when the command uses one.
        out (str): The output directory.
    """
    command: str
    scenario: str
    bank: str
    parameters: dict
    version: str
    master_seed: int
    out: str

    def to_dict(self):
        """Returns the manifest as a plain mapping."""
        return dataclasses.asdict(self)

    @property
    def hash(self):
        """The SHA-256 of the canonical JSON form."""
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode('utf-8')).hexdigest()


def encode_matrix(a):
    """Returns {"rows", "cols", "data"} for a 2-D array."""
    a = np.asarray(a, dtype=float)
    return {
        'rows': int(a.shape[0]),
        'cols': int(a.shape[1]),
        'data': [float(v) for v in a.reshape(-1)],
    }


def decode_matrix(content, where='matrix'):
    """Inverse of `encode_matrix`."""
    try:
        rows, cols = int(content['rows']), int(content['cols'])
        data = np.asarray(content['data'], dtype=float)
        return data.reshape(rows, cols)
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedFieldError(
            where, f'Entry "{where}" is not an encoded matrix;'
        ) from e


def _encode_stack(stack):
    return [encode_matrix(a) for a in stack]


def _decode_stack(items, where):
    return np.stack([decode_matrix(a, where) for a in items])


def write_json(path, content, manifest):
    """Writes content with the manifest hash under "manifest"."""
    document = dict(content)
    document['manifest'] = manifest.hash
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(document, f, sort_keys=True, indent=2)
        f.write('\n')
    logger.debug('Wrote %s', path)


def read_json(path):
    """Reads a pipeline artifact."""
    if not os.path.isfile(path):
        raise MissingArtifactError(f'Artifact "{path}" does not exist;')
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def load_document(path):
    """Reads a scenario or bank file (JSON, or YAML by extension)."""
    if not os.path.isfile(path):
        raise MissingArtifactError(f'File "{path}" does not exist;')
    with open(path, 'r', encoding='utf-8') as f:
        if str(path).lower().endswith('.json'):
            return json.load(f)
        return yaml.safe_load(f)


def load_scenario(path, settings=DEFAULT_SETTINGS):
    """Reads and validates a scenario file."""
    return validate_scenario(load_document(path), settings)


def load_bank(path):
    """Reads a quantizer-bank file."""
    return parse_bank(load_document(path))


def riccati_to_dict(riccati):
    """Returns the JSON form of a Riccati solution."""
    return {
        'T': riccati.horizon,
        'P': _encode_stack(riccati.P),
        'L': _encode_stack(riccati.L),
        'N': _encode_stack(riccati.N),
        'r': [float(v) for v in riccati.r],
    }


def riccati_from_dict(content):
    """Inverse of `riccati_to_dict`."""
    return RiccatiSolution(
        P=frozen(_decode_stack(content['P'], 'P')),
        L=frozen(_decode_stack(content['L'], 'L')),
        N=frozen(_decode_stack(content['N'], 'N')),
        r=frozen(content['r']),
    )


def stats_to_dict(stats):
    """Returns the JSON form of the innovation statistics."""
    return {
        'T': stats.horizon,
        'M': _encode_stack(stats.M),
        'Sigma_pred': _encode_stack(stats.Sigma_pred),
        'Sigma_filt': _encode_stack(stats.Sigma_filt),
        'K': _encode_stack(stats.K),
    }


def stats_from_dict(content, model):
    """Inverse of `stats_to_dict`; the model supplies A and mu0."""
    return InnovationStatistics(
        model=model,
        M=frozen(_decode_stack(content['M'], 'M')),
        Sigma_pred=frozen(_decode_stack(content['Sigma_pred'], 'Sigma_pred')),
        Sigma_filt=frozen(_decode_stack(content['Sigma_filt'], 'Sigma_filt')),
        K=frozen(_decode_stack(content['K'], 'K')),
    )


def moments_to_dict(bank, moments):
    """Returns the JSON form of the moment table, keyed by label."""
    quantizers = []
    for i, label in enumerate(bank.labels):
        quantizers.append({
            'label': label,
            'delay': bank.delays[i],
            'probs': encode_matrix(moments.probs[i]),
            'means': [encode_matrix(m) for m in moments.means[i]],
            'F': _encode_stack(moments.F[:, i]),
            'Mcal': _encode_stack(moments.Mcal[:, i]),
        })
    return {'T': moments.horizon, 'quantizers': quantizers}


def moments_from_dict(content, bank):
    """Inverse of `moments_to_dict`, in the order of the bank."""
    by_label = {q['label']: q for q in content['quantizers']}
    missing = [label for label in bank.labels if label not in by_label]
    if missing:
        raise MalformedFieldError(
            'quantizers', f'Moment table lacks quantizers {missing};'
        )
    entries = [by_label[label] for label in bank.labels]
    return CellMomentTable(
        probs=tuple(frozen(decode_matrix(q['probs'], 'probs'))
                    for q in entries),
        means=tuple(frozen(_decode_stack(q['means'], 'means'))
                    for q in entries),
        F=frozen(np.stack([_decode_stack(q['F'], 'F') for q in entries],
                          axis=1)),
        Mcal=frozen(np.stack([_decode_stack(q['Mcal'], 'Mcal')
                              for q in entries], axis=1)),
    )


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows, manifest):
    """Writes a CSV whose first line is "# manifest: <hash>"."""
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(f'# manifest: {manifest.hash}\n')
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.debug('Wrote %s', path)


def read_csv(path):
    """Reads a CSV written by `write_csv` as a list of dicts."""
    if not os.path.isfile(path):
        raise MissingArtifactError(f'Artifact "{path}" does not exist;')
    with open(path, 'r', encoding='utf-8', newline='') as f:
        lines = [line for line in f if not line.startswith('#')]
    return list(csv.DictReader(lines))


def write_lp(path, text, manifest):
    """Writes LP text behind a manifest comment line."""
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(f'\\* manifest: {manifest.hash} *\\\n')
        f.write(text)


def schedule_rows(schedule, bank):
    """Rows of schedule.csv: t, c per label, selected label."""
    header = ['t'] + [f'c_{label}' for label in bank.labels] + ['theta_star']
    rows = [
        [t] + [float(v) for v in schedule.c[t]]
        + [bank.labels[schedule.theta_star[t]]]
        for t in range(schedule.horizon)
    ]
    return header, rows


def selection_table_rows(schedule, bank):
    """Tidy rows: one per stage and quantizer."""
    header = ['t', 'quantizer', 'delay', 'price', 'beta', 'c', 'selected']
    rows = []
    for t in range(schedule.horizon):
        for i, label in enumerate(bank.labels):
            rows.append([
                t, label, bank.delays[i], float(bank.prices[i]),
                float(schedule.beta[t, i]), float(schedule.c[t, i]),
                int(schedule.theta_star[t] == i),
            ])
    return header, rows


def read_schedule(path, bank, horizon):
    """Reads bank positions from the "theta_star" (or "theta") column."""
    rows = read_csv(path)
    labels = {str(label): i for i, label in enumerate(bank.labels)}
    theta = []
    for row in rows:
        value = row.get('theta_star', row.get('theta'))
        if value is None or value.strip() not in labels:
            raise MalformedFieldError(
                'theta', f'Schedule names unknown quantizer {value!r};'
            )
        theta.append(labels[value.strip()])
    if len(theta) != horizon:
        raise MalformedFieldError(
            'theta', f'Schedule has {len(theta)} stages, expected {horizon};'
        )
    return tuple(theta)


def trajectory_rows(record, model, bank):
    """Rows of a trajectory dump: t, states, inputs, theta, arrivals."""
    n, m = model.n, model.m
    header = (['t'] + [f'x{a + 1}' for a in range(n)]
              + [f'u{a + 1}' for a in range(m)] + ['theta', 'arrivals'])
    rows = []
    for t in range(len(record.states)):
        if t < record.horizon:
            tail = (list(record.inputs[t])
                    + [bank.labels[record.selections[t]],
                       ';'.join(str(k) for k in record.arrivals[t])])
        else:
            tail = [''] * m + ['', '']
        rows.append([t] + [float(v) for v in record.states[t]] + tail)
    return header, rows
