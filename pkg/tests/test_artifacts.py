"""
Test for quantlqg/artifacts.py
"""

import json

import numpy as np
import pytest

from quantlqg import (
    MalformedFieldError,
    MissingArtifactError,
    build_moment_tables,
    load_bank,
    load_document,
    load_scenario,
    optimal_schedule,
    propagate_statistics,
    solve_riccati,
)
from quantlqg.artifacts import (
    RunManifest,
    decode_matrix,
    encode_matrix,
    moments_from_dict,
    moments_to_dict,
    read_csv,
    read_json,
    read_schedule,
    riccati_from_dict,
    riccati_to_dict,
    schedule_rows,
    stats_from_dict,
    stats_to_dict,
    write_csv,
    write_json,
)

from .helper import (
    assert_close,
    reference_bank,
    reference_model,
    scenario_path,
)


def _manifest(**changes):
    fields = dict(command='synth', scenario='s.json', bank='b.json',
                  parameters={'horizon_override': 5}, version='1.0.0',
                  master_seed=None, out='out')
    fields.update(changes)
    return RunManifest(**fields)


@pytest.mark.artifacts
def test_matrix_encoding():
    a = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.5]])
    content = encode_matrix(a)
    assert content == {'rows': 2, 'cols': 3,
                       'data': [1.0, 2.0, 3.0, 4.0, 5.0, 6.5]}
    assert np.array_equal(decode_matrix(content), a)

    with pytest.raises(MalformedFieldError) as info:
        decode_matrix({'rows': 2, 'cols': 2, 'data': [1.0]}, 'W')
    assert info.value.name == 'W'
    with pytest.raises(MalformedFieldError):
        decode_matrix({'rows': 1, 'data': [1.0]})


@pytest.mark.artifacts
def test_manifest_hash():
    assert _manifest().hash == _manifest().hash
    assert len(_manifest().hash) == 64
    assert _manifest().hash != _manifest(master_seed=1).hash
    assert _manifest().to_dict()['command'] == 'synth'


@pytest.mark.artifacts
def test_write_json(tmp_path):
    path = tmp_path / 'a.json'
    manifest = _manifest()
    write_json(str(path), {'b': 1, 'a': [1.5]}, manifest)
    content = read_json(str(path))
    assert content == {'a': [1.5], 'b': 1, 'manifest': manifest.hash}

    first = path.read_bytes()
    write_json(str(path), {'a': [1.5], 'b': 1}, manifest)
    assert path.read_bytes() == first

    with pytest.raises(MissingArtifactError):
        read_json(str(tmp_path / 'missing.json'))


@pytest.mark.artifacts
def test_riccati_and_stats(tmp_path):
    model = reference_model(T=6)
    riccati = solve_riccati(model)
    stats = propagate_statistics(model)
    path = tmp_path / 'riccati.json'
    write_json(str(path), riccati_to_dict(riccati), _manifest())
    assert riccati_from_dict(read_json(str(path))).identical_to(riccati)

    path = tmp_path / 'stats.json'
    write_json(str(path), stats_to_dict(stats), _manifest())
    loaded = stats_from_dict(read_json(str(path)), model)
    assert np.array_equal(loaded.M, stats.M)
    assert np.array_equal(loaded.K, stats.K)
    assert_close(loaded.psi, stats.psi)


@pytest.mark.artifacts
def test_moments_by_label():
    model = reference_model(T=4)
    bank = reference_bank()
    moments = build_moment_tables(bank, propagate_statistics(model))
    content = json.loads(json.dumps(moments_to_dict(bank, moments)))
    content['quantizers'].reverse()
    loaded = moments_from_dict(content, bank)
    assert np.array_equal(loaded.F, moments.F)
    assert np.array_equal(loaded.Mcal, moments.Mcal)
    for i in range(bank.size):
        assert np.array_equal(loaded.probs[i], moments.probs[i])

    content['quantizers'].pop()
    with pytest.raises(MalformedFieldError):
        moments_from_dict(content, bank)


@pytest.mark.artifacts
def test_schedule_csv(tmp_path):
    bank = reference_bank()
    schedule = optimal_schedule(
        np.array([[500.0, 10.0, 0.0], [0.0, 0.0, 0.0]]), bank.prices)
    assert schedule.theta_star == (0, 0)

    path = tmp_path / 'schedule.csv'
    header, rows = schedule_rows(schedule, bank)
    assert header == ['t', 'c_1', 'c_2', 'c_3', 'theta_star']
    write_csv(str(path), header, rows, _manifest())
    assert path.read_text().startswith('# manifest: ')
    assert read_csv(str(path))[1]['c_3'] == '300.0'
    assert read_schedule(str(path), bank, 2) == (0, 0)

    with pytest.raises(MalformedFieldError):
        read_schedule(str(path), bank, 3)

    path.write_text('t,theta\n0,1\n1,9\n')
    with pytest.raises(MalformedFieldError):
        read_schedule(str(path), bank, 2)
    with pytest.raises(MissingArtifactError):
        read_schedule(str(tmp_path / 'none.csv'), bank, 2)


@pytest.mark.artifacts
def test_load_documents(tmp_path):
    model = load_scenario(scenario_path('reference.json'))
    assert model.T == 50

    path = tmp_path / 'bank.yaml'
    content = load_document(scenario_path('bank_rate1.json'))
    path.write_text(
        'bit_rate: {}\nquantizers:\n'.format(content['bit_rate'])
        + ''.join(
            f'  - label: {q["label"]}\n'
            f'    price: {q["price"]}\n'
            f'    breakpoints: {json.dumps(q["breakpoints"])}\n'
            for q in content['quantizers']
        )
    )
    assert load_bank(str(path)).labels == \
        load_bank(scenario_path('bank_rate1.json')).labels

    with pytest.raises(MissingArtifactError):
        load_document(str(tmp_path / 'none.yaml'))
