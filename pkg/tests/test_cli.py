# SPDX-FileCopyrightText: 2026 nmdecide developers
# SPDX-License-Identifier: EUPL-1.2

"""
Tests for the command-line interface.
"""

import json

import pytest

from conftest import write_rows
from nmdecide.cli import EXIT_ERROR, EXIT_NONCONVERGENCE, EXIT_OK, main, parse_args

DIVERGENT = [[1, 0], [0, 1], [1, 0], [0, 1], [1, 1]]
NESTED = [[1, 1, 1]] * 3 + [[1, 1, 0]] * 4 + [[1, 0, 0]] * 2 + [[0, 0, 0]]
MARGINAL = [[1, 0, 1], [1, 1, 1], [1, 0, 0], [1, 1, 1], [0, 0, 0]]


def _run(args: list[str], out) -> tuple[int, dict]:
    code = main(args + ['--out', out.as_posix(), '-q'])
    report = json.loads(out.read_text(encoding='utf-8')) if out.exists() else None
    return code, report


def test_parse_args_defaults(tmp_path):
    """Defaults of the decide subcommand."""
    options = parse_args(['decide', '--samples', 'samples.csv', '--lambda', '2'])
    assert options.command == 'decide'
    assert options.criterion == 'general'
    assert options.order == 'bf'
    assert options.sweep_order == 'index'
    assert options.init == 'ones'
    assert options.procedure == 'relax'
    assert options.lam == 2.0
    assert options.out == '-'
    options = parse_args(['decide', '--samples', 's.csv', '--alpha', '0.1', '--order', f'file:{tmp_path}/o.txt'])
    assert options.order == tmp_path / 'o.txt'


def test_decide_marginal(tmp_path):
    """The marginal criterion thresholds the marginals."""
    samples = write_rows(tmp_path / 'samples.csv', MARGINAL)
    code, report = _run(['decide', '--samples', samples.as_posix(), '--criterion', 'marginal', '--lambda', '1'],
                        tmp_path / 'report.json')
    assert code == EXIT_OK
    assert report['status'] == 'ok'
    assert report['decisions'] == [1, 0, 1]
    assert report['inputs']['m'] == 3
    assert report['spec']['kind'] == 'marginal'
    assert report['expected_error'] == pytest.approx(0.6)


def test_decide_general(tmp_path):
    """The general criterion rejects both hypotheses of the divergent instance."""
    samples = write_rows(tmp_path / 'samples.csv', DIVERGENT)
    code, report = _run(['decide', '--samples', samples.as_posix(), '--lambda', '1'], tmp_path / 'report.json')
    assert code == EXIT_OK
    assert report['decisions'] == [0, 0]
    assert report['objective'] == 0.0
    assert report['sweeps'] == 1
    assert report['trace']['converged'] is True
    assert report['lambda'] == 1.0
    conditional = report['details']['conditional']
    assert [entry['hypothesis'] for entry in conditional] == [1, 2]
    assert conditional[0]['rest'] == pytest.approx(0.4)
    assert conditional[0]['threshold'] == pytest.approx(1.25)


@pytest.mark.parametrize('procedure', ['relax', 'step-down', 'step-up'])
def test_decide_ordered(tmp_path, procedure):
    """All ordered procedures agree on the nested instance."""
    samples = write_rows(tmp_path / 'samples.csv', NESTED)
    truth = tmp_path / 'truth.txt'
    truth.write_text('1\n1\n1\n', encoding='utf-8')
    code, report = _run(['decide', '--samples', samples.as_posix(), '--criterion', 'ordered', '--order', 'index',
                         '--lambda', '1', '--procedure', procedure, '--truth', truth.as_posix()],
                        tmp_path / 'report.json')
    assert code == EXIT_OK
    assert report['decisions'] == [1, 1, 0]
    assert report['objective'] == pytest.approx(0.6)
    assert report['decomposition']['total'] == 3
    assert report['decomposition']['NE1'] == 2


def test_decide_header_names(tmp_path):
    """Hypothesis names from the header are echoed."""
    samples = write_rows(tmp_path / 'samples.csv', DIVERGENT, header='alpha,beta')
    _, report = _run(['decide', '--samples', samples.as_posix(), '--lambda', '1'], tmp_path / 'report.json')
    assert report['inputs']['names'] == ['alpha', 'beta']


def test_decide_calibration(tmp_path):
    """--alpha calibrates lambda before deciding."""
    samples = write_rows(tmp_path / 'samples.csv', MARGINAL)
    code, report = _run(['decide', '--samples', samples.as_posix(), '--criterion', 'marginal', '--alpha', '0.3'],
                        tmp_path / 'report.json')
    assert code == EXIT_OK
    assert report['decisions'] == [1, 0, 0]
    assert report['calibration']['feasible'] is True
    assert report['lambda'] >= 1.5
    assert report['expected_error'] <= 0.3

    samples = write_rows(tmp_path / 'divergent.csv', DIVERGENT)
    code, report = _run(['decide', '--samples', samples.as_posix(), '--alpha', '0.5'], tmp_path / 'general.json')
    assert code == EXIT_OK
    assert report['lambda'] == 1.0
    assert report['decisions'] == [0, 0]


def test_decide_usage_errors(tmp_path):
    """Invalid flags and values exit with 1."""
    samples = write_rows(tmp_path / 'samples.csv', DIVERGENT)
    out = tmp_path / 'report.json'
    assert main(['decide', '--samples', samples.as_posix(), '--lambda', '0.5', '--out', out.as_posix()]) == EXIT_ERROR
    assert main(['decide', '--samples', samples.as_posix(), '--lambda', '1', '--alpha', '0.1']) == EXIT_ERROR
    assert main(['decide', '--samples', samples.as_posix()]) == EXIT_ERROR
    assert main(['decide', '--samples', samples.as_posix(), '--lambda', '1', '--procedure', 'step-down',
                 '--out', out.as_posix()]) == EXIT_ERROR
    assert main(['decide', '--samples', (tmp_path / 'missing.csv').as_posix(), '--lambda', '1',
                 '--out', out.as_posix()]) == EXIT_ERROR
    assert main([]) == EXIT_ERROR
    assert not out.exists()


def test_decide_bad_samples(tmp_path, capsys):
    """A malformed sample file names the line."""
    samples = write_rows(tmp_path / 'samples.csv', [[1, 0], [1, 2]])
    assert main(['decide', '--samples', samples.as_posix(), '--lambda', '1']) == EXIT_ERROR
    assert 'line 2' in capsys.readouterr().err


def test_decide_undecodable_samples(tmp_path, capsys):
    """Bytes that are not UTF-8 are a data error, not a crash."""
    samples = tmp_path / 'samples.csv'
    samples.write_bytes(b'1,0\n\xff\xfe,1\n')
    assert main(['decide', '--samples', samples.as_posix(), '--lambda', '1']) == EXIT_ERROR
    assert 'line 2' in capsys.readouterr().err


def test_unwritable_report(tmp_path, capsys):
    """A report path in a missing directory exits with 1."""
    samples = write_rows(tmp_path / 'samples.csv', DIVERGENT)
    out = tmp_path / 'missing' / 'report.json'
    code = main(['decide', '--samples', samples.as_posix(), '--lambda', '1', '--out', out.as_posix(), '-q'])
    assert code == EXIT_ERROR
    assert 'cannot write report' in capsys.readouterr().err
    assert not out.exists()


def test_decide_nonconvergence(tmp_path):
    """Hitting the sweep cap exits with 2 and still writes the report."""
    samples = write_rows(tmp_path / 'samples.csv', DIVERGENT)
    code, report = _run(['decide', '--samples', samples.as_posix(), '--lambda', '1', '--max-sweeps', '1'],
                        tmp_path / 'report.json')
    assert code == EXIT_NONCONVERGENCE
    assert report['status'] == 'nonconvergence'
    assert report['decisions'] is None
    assert report['trace']['converged'] is False


def test_chain(tmp_path):
    """Every transient state of the divergent instance is absorbed after one sweep."""
    samples = write_rows(tmp_path / 'samples.csv', DIVERGENT)
    code, report = _run(['chain', '--samples', samples.as_posix(), '--lambda', '1'], tmp_path / 'report.json')
    assert code == EXIT_OK
    chain = report['chain']
    assert chain['states'] == 4
    assert chain['fixed_points'] == [[0, 0]]
    assert chain['verification'] == 'exact'
    assert [entry['expected_sweeps'] for entry in chain['transient']] == [1.0, 1.0, 1.0]
    assert chain['max_sweeps'] == 1


def test_chain_cap(tmp_path):
    """Above --max-m-states the chain is refused."""
    samples = write_rows(tmp_path / 'samples.csv', NESTED)
    code, _ = _run(['chain', '--samples', samples.as_posix(), '--lambda', '1', '--max-m-states', '2'],
                   tmp_path / 'report.json')
    assert code == EXIT_ERROR


def test_simulate(tmp_path):
    """Simulation is reproducible and writes the truth sidecar."""
    config = tmp_path / 'scenario.ini'
    config.write_text('m = 4\nrho = 0.3\nseed = 7\nsamples = 100\ntheta_true = 1, -1, 0.5, -0.5\n', encoding='utf-8')
    outputs = []
    for name in ('first', 'second'):
        samples = tmp_path / f'{name}.csv'
        code, report = _run(['simulate', '--config', config.as_posix(), '--out-samples', samples.as_posix(),
                             '--probe', '1,4'], tmp_path / f'{name}.json')
        assert code == EXIT_OK
        outputs.append(samples.read_bytes())
    assert outputs[0] == outputs[1]
    assert (tmp_path / 'second.csv.truth').read_text(encoding='utf-8') == '1\n0\n1\n0\n'
    assert report['details']['truth'] == [1, 0, 1, 0]
    assert report['details']['probe']['m_small'] == 1
    assert report['details']['probe']['m_large'] == 4
    assert len(report['details']['analytic_marginals']) == 4

    samples = tmp_path / 'second.csv'
    code, report = _run(['decide', '--samples', samples.as_posix(), '--lambda', '1',
                         '--truth', f'{samples.as_posix()}.truth'], tmp_path / 'decide.json')
    assert code == EXIT_OK
    assert report['decomposition']['total'] == 4


def test_simulate_bad_config(tmp_path):
    """Scenario errors exit with 1."""
    config = tmp_path / 'scenario.ini'
    config.write_text('m = 4\nrho = 2\n', encoding='utf-8')
    code, _ = _run(['simulate', '--config', config.as_posix(), '--out-samples', (tmp_path / 's.csv').as_posix()],
                   tmp_path / 'report.json')
    assert code == EXIT_ERROR


def test_decompose(tmp_path):
    """Counts of the small example."""
    decisions = tmp_path / 'decisions.txt'
    decisions.write_text('1\n0\n1\n', encoding='utf-8')
    truth = tmp_path / 'truth.txt'
    truth.write_text('1\n0\n0\n', encoding='utf-8')
    code, report = _run(['decompose', '--decisions', decisions.as_posix(), '--truth', truth.as_posix()],
                        tmp_path / 'report.json')
    assert code == EXIT_OK
    assert report['decomposition'] == {'NE1': 0, 'NE2': 0, 'E1': 1, 'E2': 0, 'E3': 1, 'E4': 1, 'E5': 0, 'E6': 0,
                                       'total': 3}
    assert report['details']['partition_holds'] is True
    assert report['details']['controlled_error'] == 2
    truth.write_text('1\n0\n', encoding='utf-8')
    code, _ = _run(['decompose', '--decisions', decisions.as_posix(), '--truth', truth.as_posix()],
                   tmp_path / 'mismatch.json')
    assert code == EXIT_ERROR


def test_report_to_stdout(tmp_path, capsys):
    """Without --out the report goes to standard output, the status line to standard error."""
    samples = write_rows(tmp_path / 'samples.csv', DIVERGENT)
    assert main(['decide', '--samples', samples.as_posix(), '--lambda', '1']) == EXIT_OK
    captured = capsys.readouterr()
    assert json.loads(captured.out)['decisions'] == [0, 0]
    assert 'decide: done' in captured.err


def test_version(capsys):
    """--version prints the program name."""
    assert main(['--version']) == EXIT_OK
    assert 'nmdecide' in capsys.readouterr().out
