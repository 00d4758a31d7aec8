import json
import subprocess
import sys
import time

import numpy as np
import pytest

import posebridge as pb
from posebridge.cli import build_parser, main


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """synth-recording -> extract -> build, driven through the CLI."""
    root = tmp_path_factory.mktemp("cli")
    rec = root / "rec.jsonl"
    lms = root / "landmarks.json"
    store = root / "store.json"
    assert main(["synth-recording", "--out", str(rec), "--frames", "240", "--seed", "5"]) == 0
    assert main(["extract", "--recording", str(rec), "--out", str(lms),
                 "--bandwidth", "0.08"]) == 0
    assert main(["build", "--landmarks", str(lms), "--out", str(store), "--k", "8"]) == 0
    return {"root": root, "rec": rec, "landmarks": lms, "store": store}


def first_pair(workdir):
    lm = json.loads(workdir["landmarks"].read_text())
    return lm["pairs"][0]["human"], lm["pairs"][0]["humanoid"]


class TestDefaults:
    def test_flag_defaults_match_documented_values(self):
        parser = build_parser()
        args = parser.parse_args(["replay", "--store", "s", "--recording", "r", "--out", "o"])
        assert (args.alpha, args.gamma, args.eta) == (0.75, 0.3, 0.15)
        assert (args.candidates, args.backward) == (10, 10)
        args = parser.parse_args(["stream", "--store", "s"])
        assert (args.alpha, args.gamma, args.eta) == (0.75, 0.3, 0.15)
        args = parser.parse_args(["build", "--landmarks", "l", "--out", "o"])
        assert args.k == 10 and args.reg == 1e-8


class TestProject:
    def test_landmark_pose_round_trips(self, workdir, capsys):
        pose, config = first_pair(workdir)
        code = main([
            "project", "--store", str(workdir["store"]),
            "--pose", ",".join(repr(v) for v in pose),
            "--candidates", "6", "--backward", "6",
        ])
        assert code == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert len(out) == 1
        got = np.asarray([float(v) for v in out[0].split(",")])
        assert np.abs(got - np.asarray(config)).max() < 0.05

    def test_pose_file_gives_one_line_per_pose(self, workdir, capsys, tmp_path):
        lm = json.loads(workdir["landmarks"].read_text())
        pose_file = tmp_path / "poses.csv"
        pose_file.write_text(
            "\n".join(",".join(repr(v) for v in p["human"]) for p in lm["pairs"][:4]) + "\n"
        )
        assert main(["project", "--store", str(workdir["store"]),
                     "--pose-file", str(pose_file)]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert len(out) == 4

    def test_bad_pose_is_one_line_error(self, workdir, capsys):
        code = main(["project", "--store", str(workdir["store"]), "--pose", "not,a,number"])
        assert code == 1
        err = capsys.readouterr().err.strip().splitlines()
        assert len(err) == 1 and err[0].startswith("error: ")


class TestReplay:
    def test_replay_metrics_stay_below_pose_suite_bound(self, workdir, capsys, tmp_path):
        out = tmp_path / "replayed.jsonl"
        csv = tmp_path / "metrics.csv"
        code = main([
            "replay", "--store", str(workdir["store"]),
            "--recording", str(workdir["rec"]),
            "--out", str(out), "--metrics-csv", str(csv),
            "--candidates", "6", "--backward", "6",
        ])
        assert code == 0
        rows = csv.read_text().strip().splitlines()[1:]
        m_max = np.asarray([float(r.split(",")[1]) for r in rows])
        assert len(m_max) == 240
        assert m_max.mean() < 10.0  # pipeline self-consistency vs the pose-suite bound
        capsys.readouterr()

    def test_replay_missing_recording_leaves_no_output(self, workdir, capsys, tmp_path):
        out = tmp_path / "never.jsonl"
        code = main([
            "replay", "--store", str(workdir["store"]),
            "--recording", str(tmp_path / "missing.jsonl"), "--out", str(out),
        ])
        assert code == 1
        err = capsys.readouterr().err.strip().splitlines()
        assert len(err) == 1 and err[0].startswith("error: ")
        assert not out.exists()


class TestErrors:
    def test_extract_missing_recording(self, capsys, tmp_path):
        code = main(["extract", "--recording", str(tmp_path / "no.jsonl"),
                     "--out", str(tmp_path / "lm.json")])
        assert code == 1
        err = capsys.readouterr().err.strip()
        assert err.startswith("error: ") and "\n" not in err
        assert not (tmp_path / "lm.json").exists()

    def test_build_missing_landmarks(self, capsys, tmp_path):
        code = main(["build", "--landmarks", str(tmp_path / "no.json"),
                     "--out", str(tmp_path / "s.json")])
        assert code == 1
        assert capsys.readouterr().err.startswith("error: ")


class TestStream:
    def _spawn(self, workdir, extra=()):
        return subprocess.Popen(
            [sys.executable, "-m", "posebridge.cli", "stream",
             "--store", str(workdir["store"]), "--candidates", "6", "--backward", "6",
             *extra],
            stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=subprocess.PIPE,
            text=True,
        )

    def test_three_lines_in_three_lines_out_in_order(self, workdir):
        lm = json.loads(workdir["landmarks"].read_text())
        lines = [",".join(repr(v) for v in lm["pairs"][i]["human"]) for i in (0, 3, 7)]
        proc = self._spawn(workdir, extra=("--no-smooth",))
        out, err = proc.communicate("\n".join(lines) + "\n", timeout=120)
        assert proc.returncode == 0, err
        rows = out.strip().splitlines()
        assert len(rows) == 3
        for row, idx in zip(rows, (0, 3, 7)):
            got = np.asarray([float(v) for v in row.split(",")])
            want = np.asarray(lm["pairs"][idx]["humanoid"])
            assert np.abs(got - want).max() < 0.05

    def test_per_line_latency_within_budget(self, workdir):
        # stream overhead budget: projection latency plus one millisecond
        store = pb.load_store(workdir["store"])
        engine = pb.ProjectionEngine(store, n_candidates=6, n_backward=6)
        lm = store.landmarks
        rng = np.random.default_rng(0)
        queries = lm.human[rng.integers(0, len(lm), 300)]
        for q in queries[:50]:
            pb.project_relaxed(engine, q)
        t0 = time.perf_counter()
        for q in queries:
            pb.project_relaxed(engine, q)
        proj_mean = (time.perf_counter() - t0) / len(queries)

        proc = self._spawn(workdir)
        try:
            line = ",".join(repr(float(v)) for v in queries[0]) + "\n"
            proc.stdin.write(line)
            proc.stdin.flush()
            assert proc.stdout.readline()  # warm up the pipeline
            t0 = time.perf_counter()
            for q in queries:
                proc.stdin.write(",".join(repr(float(v)) for v in q) + "\n")
                proc.stdin.flush()
                assert proc.stdout.readline()
            stream_mean = (time.perf_counter() - t0) / len(queries)
        finally:
            proc.stdin.close()
            proc.wait(timeout=60)
        assert stream_mean <= proj_mean + 1e-3, (stream_mean, proj_mean)

    def test_malformed_line_exits_nonzero_with_one_line_reason(self, workdir):
        proc = self._spawn(workdir)
        out, err = proc.communicate("definitely,not,floats\n", timeout=120)
        assert proc.returncode == 1
        errlines = err.strip().splitlines()
        assert len(errlines) == 1 and errlines[0].startswith("error: ")


class TestBench:
    def test_bench_prints_pass_lines_and_writes_report(self, workdir, capsys, tmp_path):
        out = tmp_path / "report.json"
        code = main([
            "bench", "--store", str(workdir["store"]), "--out", str(out),
            "--suites", "poses,similarity", "--candidates", "6", "--backward", "6",
        ])
        printed = capsys.readouterr().out
        assert code == 0, printed
        assert "[PASS] pose_suite_below_tolerance" in printed
        assert json.loads(out.read_text())["type"] == "bench_report"
