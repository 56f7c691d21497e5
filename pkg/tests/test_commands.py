import csv
import io
import json

import pytest

from rearrangeflow.main import main
from rearrangeflow.utils.storage import save_instance


@pytest.fixture
def chain_file(tmp_path, chain):
    path = tmp_path / 'chain.json'
    save_instance(chain, str(path))
    return path


@pytest.fixture
def swap_file(tmp_path, swap):
    path = tmp_path / 'swap.json'
    save_instance(swap, str(path))
    return path


@pytest.fixture
def corpus(tmp_path, chain, swap):
    directory = tmp_path / 'corpus'
    directory.mkdir()
    save_instance(chain.with_buffers([(17, 7)]), str(directory / 'chain.json'))
    save_instance(swap, str(directory / 'swap.json'))
    return directory


class TestGen(object):

    def test_writes_valid_instance(self, tmp_path):
        out = tmp_path / 'a.json'
        assert main(['gen', '-n', '10', '-d', '0.225', '--seed', '1', '-o', str(out)]) == 0
        data = json.loads(out.read_text())
        assert data['n'] == 10 and len(data['starts']) == 10

    def test_repeat_is_byte_identical(self, tmp_path):
        first, second = tmp_path / 'a.json', tmp_path / 'b.json'
        main(['gen', '-n', '6', '--seed', '4', '-o', str(first)])
        main(['gen', '-n', '6', '--seed', '4', '-o', str(second)])
        assert first.read_bytes() == second.read_bytes()

    def test_over_dense(self, tmp_path, capsys):
        assert main(['gen', '-n', '10', '-d', '0.6', '-o', str(tmp_path / 'x.json')]) == 2
        assert 'generation failed' in capsys.readouterr().err


class TestSolve(object):

    def test_monotone_mode(self, chain_file, capsys):
        assert main(['solve', str(chain_file), '--mode', 'monotone', '--no-timing']) == 0
        assert capsys.readouterr().out.strip() == 'solved=true actions=3 buffers=0 time_s=0.000'

    def test_monotone_mode_on_swap_is_infeasible(self, swap_file, capsys):
        assert main(['solve', str(swap_file), '--mode', 'monotone']) == 4
        assert capsys.readouterr().out.startswith('solved=false')

    def test_informed_writes_verified_solution(self, swap_file, tmp_path, capsys):
        out = tmp_path / 'plan.json'
        assert main(['solve', str(swap_file), '--mode', 'informed', '--verify', '-o', str(out)]) == 0
        assert 'buffers=1' in capsys.readouterr().out
        data = json.loads(out.read_text())
        assert data['num_actions'] == 3 and data['num_buffers'] == 1 and data['n'] == 2
        assert [a['kind'] for a in data['actions']].count('to_buffer') == 1

    def test_exhaustive_uses_one_buffer(self, swap_file, capsys):
        assert main(['solve', str(swap_file), '--exhaustive', '--verify']) == 0
        assert 'actions=3 buffers=1' in capsys.readouterr().out

    def test_oracle_mode(self, swap_file, capsys):
        assert main(['solve', str(swap_file), '--mode', 'oracle', '--max-buffer-visits', '2']) == 0
        assert 'actions=3' in capsys.readouterr().out

    def test_edfs_mode(self, swap_file, capsys):
        assert main(['solve', str(swap_file), '--mode', 'edfs', '--object', '1', '--buffer', 'B0']) == 0
        assert 'actions=3 buffers=1' in capsys.readouterr().out

    def test_edfs_rejects_bad_buffer(self, swap_file, capsys):
        for buffer in ('', 'B99'):
            assert main(['solve', str(swap_file), '--mode', 'edfs', '--object', '1', '--buffer', buffer]) == 1
            assert 'error:' in capsys.readouterr().err

    def test_timeout_exit_code(self, swap_file):
        assert main(['solve', str(swap_file), '--mode', 'informed', '--time-limit', '0']) == 3

    def test_no_timing_output_is_deterministic(self, swap_file, tmp_path):
        first, second = tmp_path / 'a.json', tmp_path / 'b.json'
        for out in (first, second):
            main(['solve', str(swap_file), '--seed', '2', '--no-timing', '-o', str(out)])
        assert first.read_bytes() == second.read_bytes()

    def test_missing_file(self, tmp_path):
        assert main(['solve', str(tmp_path / 'nope.json')]) == 1


class TestBench(object):

    def test_empty_corpus(self, tmp_path, capsys):
        empty = tmp_path / 'empty'
        empty.mkdir()
        assert main(['bench', str(empty)]) == 0
        assert capsys.readouterr().out == 'instance,mode,solved,actions,buffers,time_s,seed\n'

    def test_rows_and_aggregates(self, corpus, tmp_path):
        out = tmp_path / 'bench.csv'
        solutions = tmp_path / 'solutions'
        assert main(['bench', str(corpus), '--modes', 'informed,random', '--no-timing',
                     '--solutions-dir', str(solutions), '-o', str(out)]) == 0
        data, aggregates = out.read_text().split('\n\n')
        rows = list(csv.DictReader(io.StringIO(data)))
        assert [(r['instance'], r['mode']) for r in rows] == [
            ('chain', 'informed'), ('chain', 'random'), ('swap', 'informed'), ('swap', 'random')]
        assert all(r['solved'] == 'true' for r in rows)
        stats = list(csv.DictReader(io.StringIO(aggregates)))
        assert [(s['mode'], s['n'], s['count']) for s in stats] == [
            ('informed', '2', '1'), ('informed', '3', '1'), ('random', '2', '1'), ('random', '3', '1')]
        assert sorted(p.name for p in solutions.iterdir()) == [
            'chain_informed.json', 'chain_random.json', 'swap_informed.json', 'swap_random.json']

    def test_parallel_matches_serial(self, corpus, tmp_path):
        serial, parallel = tmp_path / 's.csv', tmp_path / 'p.csv'
        main(['bench', str(corpus), '--modes', 'monotone', '--no-timing', '-o', str(serial)])
        main(['bench', str(corpus), '--modes', 'monotone', '--no-timing', '--jobs', '2', '-o', str(parallel)])
        assert serial.read_bytes() == parallel.read_bytes()

    def test_unreadable_file_is_unsolved_row(self, tmp_path, capsys):
        directory = tmp_path / 'broken'
        directory.mkdir()
        (directory / 'bad.json').write_text('{"n": 2')
        assert main(['bench', str(directory), '--modes', 'monotone']) == 0
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out.split('\n\n')[0])))
        assert rows == [{'instance': 'bad', 'mode': 'monotone', 'solved': 'false', 'actions': '',
                         'buffers': '', 'time_s': '0.0000', 'seed': '0'}]


class TestViz(object):

    def test_instance_only(self, chain_file, tmp_path):
        out = tmp_path / 'chain.svg'
        assert main(['viz', str(chain_file), '-o', str(out)]) == 0
        svg = out.read_text()
        assert svg.startswith('<?xml') and 'version="1.1"' in svg
        assert '<polyline' not in svg
        assert svg.count('<circle') == 6

    def test_with_solution(self, swap_file, tmp_path):
        plan = tmp_path / 'plan.json'
        main(['solve', str(swap_file), '-o', str(plan)])
        out = tmp_path / 'swap.svg'
        assert main(['viz', str(swap_file), '--solution', str(plan), '-o', str(out)]) == 0
        assert out.read_text().count('<polyline') == 3

    def test_mismatched_solution(self, chain_file, swap_file, tmp_path):
        plan = tmp_path / 'plan.json'
        main(['solve', str(swap_file), '-o', str(plan)])
        assert main(['viz', str(chain_file), '--solution', str(plan), '-o', str(tmp_path / 'x.svg')]) == 5


class TestSurvey(object):

    def test_counts_add_up(self, capsys):
        assert main(['survey', '-n', '3', '--densities', '0.1,0.6', '--count', '3']) == 0
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert [r['density'] for r in rows] == ['0.1', '0.6']
        for row in rows:
            counted = sum(int(row[field]) for field in ('monotone', 'nonmonotone', 'undetermined', 'failed'))
            assert counted == int(row['attempts'])

    def test_deadline_stop_is_undetermined(self, tmp_path):
        out = tmp_path / 'survey.csv'
        assert main(['survey', '-n', '3', '--densities', '0.1', '--count', '2', '--time-limit', '0',
                     '-o', str(out)]) == 0
        row, = csv.DictReader(io.StringIO(out.read_text()))
        assert row['monotone'] == '0' and row['nonmonotone'] == '0'
        assert int(row['undetermined']) + int(row['failed']) == 2
