import csv
import json
import re
from pathlib import Path

import jsonschema
import pytest

from cutoff.report import build_id
from cutoff.run import main
from cutoff.util import Settings, UsageError, c_grid, load_config, parse_args

SCHEMA = Path(__file__).resolve().parent.parent / 'docs' / 'profile.schema.json'


def read_csv(path):
    lines = path.read_text().splitlines()
    header = [line for line in lines if line.startswith('# ')]
    table = list(csv.reader(line for line in lines if not line.startswith('#')))
    return header, table


def test_hypercube_profile_json(tmp_path):
    out = tmp_path / 'hypercube.json'
    assert main(['hypercube', '--n', '64', '--format', 'json', '--out', str(out), '-q']) == 0
    document = json.loads(out.read_text())
    assert len(document['rows']) == 9
    assert [row['c'] for row in document['rows']] == [-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]
    assert document['header']['parameters']['family'] == 'hypercube'
    assert document['header']['parameters']['n'] == 64
    assert document['header']['command'].startswith('cutoff hypercube --n 64')
    assert all(row['error_term'] == 0.0 for row in document['rows'])


def test_kcycle_exact_mode_csv(tmp_path):
    out = tmp_path / 'kcycle.csv'
    assert main(['kcycle', '--n', '10', '--c-from', '0', '--c-to', '1', '--mode', 'exact', '--out', str(out), '-q']) == 0
    header, table = read_csv(out)
    assert [line.split(':', 1)[0] for line in header] == ['# command', '# build', '# mode', '# parameters']
    assert table[0] == ['c', 't', 'realized_c', 'exact_tv', 'main_term', 'error_term', 'limit_value', 'gap']
    assert len(table) == 4
    for row in table[1:]:
        assert re.fullmatch(r'\d+/\d+', row[3])
        float(row[4])


def test_exact_mode_outside_rational_pipeline(tmp_path):
    argv = ['ehrenfest', '--n', '40', '--mode', 'exact', '--out', str(tmp_path / 'e.csv'), '-q']
    assert main(argv) == 2


def test_missing_size_is_usage_error():
    assert main(['hypercube', '-q']) == 2
    assert main(['simulate', 'gibbs', '--n1', '4', '-q']) == 2


def test_bad_probability_is_usage_error(tmp_path):
    assert main(['gibbs', '--n1', '5', '--n2', '5', '--p', '3/2', '--out', str(tmp_path / 'g.csv'), '-q']) == 2


def test_argparse_rejects_unknown_suite():
    with pytest.raises(SystemExit) as found:
        main(['verify', 'spectral'])
    assert found.value.code == 2


def test_config_defaults_and_flags_win(tmp_path):
    config = tmp_path / 'cutoff.cfg'
    config.write_text('# defaults\nn = 16\n--c-from = 0\nc-step = 0.5\n')
    out = tmp_path / 'a.json'
    assert main(['hypercube', '--config', str(config), '--c-to', '1', '--format', 'json', '--out', str(out), '-q']) == 0
    document = json.loads(out.read_text())
    assert document['header']['parameters']['n'] == 16
    assert [row['c'] for row in document['rows']] == [0.0, 0.5, 1.0]

    out = tmp_path / 'b.json'
    assert main(['hypercube', '--config', str(config), '--n', '32', '--c-to', '0', '--format', 'json',
                 '--out', str(out), '-q']) == 0
    assert json.loads(out.read_text())['header']['parameters']['n'] == 32


def test_config_errors(tmp_path):
    assert main(['hypercube', '--config', str(tmp_path / 'missing.cfg')]) == 2
    config = tmp_path / 'broken.cfg'
    config.write_text('n 16\n')
    with pytest.raises(UsageError):
        load_config(str(config))


def test_verify_command(tmp_path):
    out = tmp_path / 'verify.csv'
    assert main(['verify', 'krawtchouk', '--out', str(out), '-q']) == 0
    header, table = read_csv(out)
    assert table == [['suite', 'checks', 'failures', 'passed'], table[1]]
    assert table[1][0] == 'krawtchouk'
    assert table[1][3] == 'True'
    assert '# passed: true' in out.read_text()


def test_stats_go_to_stderr(tmp_path, capsys):
    assert main(['hypercube', '--n', '8', '--c-from', '0', '--c-to', '0', '--out', str(tmp_path / 'h.csv'),
                 '--stats', '-q']) == 0
    assert 'Total execution time' in capsys.readouterr().err


def test_simulate_parses():
    args = parse_args(['simulate', 'kcycle', '--n', '8', '--t', '3', '--workers', '2'])
    assert (args.command, args.sim_family, args.n, args.t, args.workers) == ('simulate', 'kcycle', 8, 3, 2)


def test_build_id():
    assert re.fullmatch(r'\d+\.\d+\.\d+\+[0-9a-f]{12}', build_id())


def test_c_grid():
    assert c_grid() == [-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]
    assert c_grid(0, 1, 0.3) == [0.0, 0.3, 0.6, 0.9]
    with pytest.raises(UsageError):
        c_grid(0, 1, 0)
    with pytest.raises(UsageError):
        c_grid(1, 0, 0.5)


def test_require_names_flags():
    settings = Settings(command='profile', family='gibbs', quiet=True)
    with pytest.raises(UsageError, match='--n1, --n2'):
        settings.require('n1', 'n2')


def test_nonpositive_schedule_is_usage_error(tmp_path):
    argv = ['gibbs', '--n1', '20', '--n2', '20', '--c-from', '-10', '--c-to', '-10', '--out', str(tmp_path / 'g.csv'), '-q']
    assert main(argv) == 2


def test_simulate_is_reproducible(tmp_path):
    out = tmp_path / 'ehrenfest.csv'
    argv = ['simulate', 'ehrenfest', '--n', '4', '--m', '2', '--t', '5', '--trajectories', '20000', '--out', str(out), '-q']
    texts = []
    for _ in range(2):
        assert main(argv) in (0, 1)
        texts.append(out.read_text())
    assert texts[0] == texts[1]
    assert '# passed: ' in texts[0]
    assert '# algorithm: "PCG64"' in texts[0]


def test_simulate_without_trajectories_is_usage_error():
    assert main(['simulate', 'hypercube', '--n', '4', '--t', '3', '--trajectories', '0', '-q']) == 2


@pytest.mark.parametrize('argv', [
    ['hypercube', '--n', '32'],
    ['gibbs', '--n1', '10', '--n2', '10', '--c-from', '-1', '--c-to', '1'],
    ['kcycle', '--n', '8', '--c-from', '0', '--c-to', '1', '--mode', 'exact'],
])
def test_json_profile_matches_schema(tmp_path, argv):
    out = tmp_path / 'profile.json'
    assert main(argv + ['--format', 'json', '--out', str(out), '-q']) == 0
    jsonschema.validate(instance=json.loads(out.read_text()), schema=json.loads(SCHEMA.read_text()))


def test_csv_and_json_rows_agree(tmp_path):
    argv = ['ehrenfest', '--n', '30', '--m', '2', '--c-from', '-1', '--c-to', '1', '-q']
    assert main(argv + ['--out', str(tmp_path / 'e.csv')]) == 0
    assert main(argv + ['--format', 'json', '--out', str(tmp_path / 'e.json')]) == 0
    _, table = read_csv(tmp_path / 'e.csv')
    document = json.loads((tmp_path / 'e.json').read_text())
    assert table[0] == document['columns']
    assert len(table) - 1 == len(document['rows'])
    for values, row in zip(table[1:], document['rows']):
        parsed = {name: float(value) for name, value in zip(table[0], values)}
        assert parsed == {name: float(row[name]) for name in document['columns']}
        assert values[1] == str(row['t'])


def test_config_flags_are_booleans(tmp_path, capsys):
    config = tmp_path / 'cutoff.cfg'
    config.write_text('stats = false\nquiet = yes\nn = 8\nc-from = 0\nc-to = 0\n')
    args = parse_args(['hypercube', '--config', str(config)])
    assert args.stats is False
    assert args.quiet is True
    assert main(['hypercube', '--config', str(config), '--out', str(tmp_path / 'h.csv')]) == 0
    assert 'Total execution time' not in capsys.readouterr().err
    assert parse_args(['hypercube', '--config', str(config), '--stats']).stats is True


@pytest.mark.parametrize('text', ['stats = maybe\n', 'bogus = 1\n', 'family = gibbs\n'])
def test_config_rejects_bad_keys(tmp_path, text):
    config = tmp_path / 'cutoff.cfg'
    config.write_text('n = 8\n' + text)
    with pytest.raises(UsageError):
        parse_args(['hypercube', '--config', str(config)])
    assert main(['hypercube', '--config', str(config), '-q']) == 2
