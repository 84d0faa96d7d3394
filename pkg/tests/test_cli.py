import threading
import time

import numpy as np
import pytest

from rotavg import averaging, bench, so3, synthetic
from rotavg.cli import main

BENCH_ARGS = [
    "bench", "--methods", "geodesic-l1", "--rejection", "on",
    "--sigmas", "5", "--ratios", "0", "0.5", "--n", "15", "--trials", "3",
    "--seed", "4",
]


@pytest.fixture(scope="module")
def server_url():
    """A real uvicorn instance on a loopback port."""
    import uvicorn

    from rotavg.service import create_app

    config = uvicorn.Config(create_app(), host="127.0.0.1", port=0, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    for _ in range(200):
        if server.started:
            break
        time.sleep(0.05)
    else:
        raise RuntimeError("server did not start")
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


class TestBenchCommand:
    def test_writes_csv_and_exits_zero(self, tmp_path):
        out = tmp_path / "out.csv"
        assert main(BENCH_ARGS + ["--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == bench.CSV_HEADER
        assert len(lines) == 1 + 2 * 3  # header + cells x trials

    def test_summary_flag_prints_table(self, tmp_path, capsys):
        out = tmp_path / "out.csv"
        assert main(BENCH_ARGS + ["--out", str(out), "--summary"]) == 0
        printed = capsys.readouterr().out
        assert "geodesic-l1[on]" in printed
        assert "(5\N{DEGREE SIGN}, 50%)" in printed

    def test_no_summary_by_default(self, tmp_path, capsys):
        out = tmp_path / "out.csv"
        main(BENCH_ARGS + ["--out", str(out)])
        assert "geodesic-l1" not in capsys.readouterr().out

    def test_dump_instances_writes_files(self, tmp_path):
        out = tmp_path / "out.csv"
        dump_dir = tmp_path / "dumps"
        assert main(BENCH_ARGS + ["--out", str(out), "--dump-instances", str(dump_dir)]) == 0
        assert len(list(dump_dir.iterdir())) == 6

    def test_matches_library_sweep(self, tmp_path):
        out = tmp_path / "out.csv"
        main(BENCH_ARGS + ["--out", str(out)])
        direct = bench.run_sweep(
            bench.SweepConfig(
                methods=("geodesic-l1",), rejection="on", sigmas=(5.0,),
                outlier_ratios=(0.0, 0.5), n_rotations=15, trials=3, base_seed=4,
            )
        )
        parsed = bench.parse_csv(out)
        assert [r.error_deg for r in parsed] == [r.error_deg for r in direct]

    def test_unwritable_out_path_exits_one(self, tmp_path, capsys):
        out = tmp_path / "missing_dir" / "out.csv"
        assert main(BENCH_ARGS + ["--out", str(out)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_method_is_a_usage_error(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["bench", "--methods", "bogus", "--out", str(tmp_path / "x.csv")])

    def test_threads_flag(self, tmp_path):
        out = tmp_path / "out.csv"
        assert main(BENCH_ARGS + ["--out", str(out), "--threads", "2"]) == 0
        serial = tmp_path / "serial.csv"
        main(BENCH_ARGS + ["--out", str(serial)])
        a = [r.error_deg for r in bench.parse_csv(out)]
        b = [r.error_deg for r in bench.parse_csv(serial)]
        assert a == b


class TestAverageCommand:
    @pytest.fixture()
    def dump_file(self, tmp_path):
        spec = synthetic.TrialSpec(30, 5.0, 0.25, 17)
        inst = synthetic.make_instance(spec)
        path = tmp_path / "inst.txt"
        synthetic.dump_instance(path, spec, inst.rotations)
        return path, inst

    def test_prints_estimate(self, dump_file, capsys):
        path, inst = dump_file
        assert main(["average", str(path), "--method", "geodesic-l1"]) == 0
        out_lines = capsys.readouterr().out.strip().splitlines()
        estimate = np.array([[float(x) for x in ln.split()] for ln in out_lines[:3]])
        so3.check_rotation(estimate)
        direct = averaging.geodesic_l1_mean(inst.rotations)
        np.testing.assert_array_equal(estimate, direct.estimate)
        assert "iterations=" in out_lines[3]

    def test_rejection_off(self, dump_file, capsys):
        path, inst = dump_file
        assert main(["average", str(path), "--method", "chordal-l1", "--rejection", "off"]) == 0
        out_lines = capsys.readouterr().out.strip().splitlines()
        estimate = np.array([[float(x) for x in ln.split()] for ln in out_lines[:3]])
        direct = averaging.chordal_l1_mean_approx(
            inst.rotations, averaging.AveragingConfig(rejection_enabled=False)
        )
        np.testing.assert_array_equal(estimate, direct.estimate)

    def test_missing_file_exits_one(self, tmp_path, capsys):
        assert main(["average", str(tmp_path / "nope.txt")]) == 1
        assert "error:" in capsys.readouterr().err


class TestServerMode:
    def test_bench_against_live_server(self, server_url, tmp_path):
        remote = tmp_path / "remote.csv"
        local = tmp_path / "local.csv"
        assert main(BENCH_ARGS + ["--out", str(remote), "--server", server_url]) == 0
        assert main(BENCH_ARGS + ["--out", str(local)]) == 0
        a = bench.parse_csv(remote)
        b = bench.parse_csv(local)
        assert [r.error_deg for r in a] == [r.error_deg for r in b]

    def test_average_against_live_server(self, server_url, tmp_path, capsys):
        spec = synthetic.TrialSpec(20, 5.0, 0.25, 31)
        inst = synthetic.make_instance(spec)
        path = tmp_path / "inst.txt"
        synthetic.dump_instance(path, spec, inst.rotations)
        assert main(["average", str(path), "--server", server_url]) == 0
        out_lines = capsys.readouterr().out.strip().splitlines()
        estimate = np.array([[float(x) for x in ln.split()] for ln in out_lines[:3]])
        direct = averaging.geodesic_l1_mean(inst.rotations)
        assert so3.geodesic_distance(estimate, direct.estimate) < 1e-9

    def test_dump_instances_rejected_with_server(self, server_url, tmp_path, capsys):
        args = BENCH_ARGS + [
            "--out", str(tmp_path / "x.csv"),
            "--server", server_url,
            "--dump-instances", str(tmp_path / "d"),
        ]
        assert main(args) == 1
        assert "in-process" in capsys.readouterr().err

    def test_unreachable_server_exits_one(self, tmp_path, capsys):
        args = BENCH_ARGS + ["--out", str(tmp_path / "x.csv"), "--server", "http://127.0.0.1:9"]
        assert main(args) == 1
        assert "error:" in capsys.readouterr().err
