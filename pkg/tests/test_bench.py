import json
import os

import numpy as np
import pytest

from admira.analysis import snr_meas
from admira.bench import (
    ProblemSpec,
    degrees_of_freedom,
    generate_problem,
    run_phase,
    run_table1,
    run_table2,
    run_trial,
    solve_once,
    table1_measurement_count,
)
from admira import fileio
from admira.linalg import full_svd
from admira.operators import GaussianOperator, SamplingOperator


class TestProblemSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            ProblemSpec(4, 4, 5, "sampling", 10)
        with pytest.raises(ValueError):
            ProblemSpec(4, 4, 2, "sampling", 17)  # p > m*n
        with pytest.raises(ValueError):
            ProblemSpec(4, 4, 2, "fourier", 10)

    def test_hash_stable_and_sensitive(self):
        a = ProblemSpec(10, 10, 2, "sampling", 50, None, seed=1)
        b = ProblemSpec(10, 10, 2, "sampling", 50, None, seed=1)
        c = ProblemSpec(10, 10, 2, "sampling", 50, None, seed=2)
        assert a.hash() == b.hash()
        assert a.hash() != c.hash()

    def test_table1_budget_matches_published_formula(self):
        # n=500, r=2: p/d_r rounds to 47
        p = table1_measurement_count(500, 2)
        assert round(p / degrees_of_freedom(500, 500, 2)) == 47


class TestGenerateProblem:
    def test_ground_truth_rank(self):
        spec = ProblemSpec(30, 25, 2, "sampling", 300, None, seed=0)
        _, _, X0, _ = generate_problem(spec)
        s = full_svd(X0).sigmas
        assert s[2] <= 1e-10 * s[0]

    def test_noise_snr_exact(self):
        spec = ProblemSpec(20, 20, 2, "gaussian", 300, 20.0, seed=1)
        op, b, X0, nu = generate_problem(spec)
        b_clean = b - nu
        assert abs(snr_meas(b_clean, nu) - 20.0) <= 1e-9

    def test_noiseless_has_zero_noise(self):
        spec = ProblemSpec(20, 20, 2, "gaussian", 300, None, seed=1)
        op, b, X0, nu = generate_problem(spec)
        assert np.all(nu == 0.0)
        np.testing.assert_array_equal(b, op.apply(X0))

    def test_same_seed_bit_identical(self):
        spec = ProblemSpec(15, 18, 2, "sampling", 100, 25.0, seed=9)
        _, b1, X1, nu1 = generate_problem(spec)
        _, b2, X2, nu2 = generate_problem(spec)
        np.testing.assert_array_equal(b1, b2)
        np.testing.assert_array_equal(X1, X2)
        np.testing.assert_array_equal(nu1, nu2)

    def test_operator_kinds(self):
        g = generate_problem(ProblemSpec(8, 8, 1, "gaussian", 60, None, 0))[0]
        s = generate_problem(ProblemSpec(8, 8, 1, "sampling", 60, None, 0))[0]
        assert isinstance(g, GaussianOperator)
        assert isinstance(s, SamplingOperator)


class TestRunTrial:
    def test_svt_rejects_noisy_spec(self):
        spec = ProblemSpec(10, 10, 1, "sampling", 60, 20.0, seed=0)
        with pytest.raises(ValueError):
            run_trial(spec, algo="svt")

    def test_unknown_algo(self):
        spec = ProblemSpec(10, 10, 1, "sampling", 60, None, seed=0)
        with pytest.raises(ValueError):
            run_trial(spec, algo="amp")

    def test_record_fields(self):
        spec = ProblemSpec(20, 20, 1, "sampling", 200, None, seed=0)
        record, report = run_trial(spec, trial_index=3)
        assert record.spec_hash == spec.hash()
        assert record.trial == 3
        assert record.iterations == report.iterations
        assert record.stop_reason in ("tol", "monotone_break", "max_iter")


class TestSweeps:
    def test_table1_tiny(self, tmp_path):
        out = tmp_path / "t1.csv"
        header, rows = run_table1([24], trials=2, out_csv=str(out), seed=0)
        assert header[0] == "n" and "spec_hash" in header
        assert len(rows) == 1 and rows[0][0] == 24
        lines = out.read_text().strip().splitlines()
        assert lines[0].split(",")[0] == "n"
        assert len(lines) == 2

    def test_table2_tiny(self, tmp_path):
        out = tmp_path / "t2.csv"
        header, rows = run_table2(r_list=[1], density_list=[0.5], n=20,
                                  trials=2, out_csv=str(out), seed=0)
        assert len(rows) == 1
        row = dict(zip(header, rows[0]))
        assert row["r"] == 1 and row["trials"] == 2
        assert "admira_snr_db" in header and "svt_iters" in header

    def test_phase_counts_within_range(self, tmp_path):
        header, rows = run_phase([150, 300], [1], n=20, trials=3, seed=0,
                                 out_csv=str(tmp_path / "ph.csv"))
        for row in rows:
            cell = dict(zip(header, row))
            assert 0 <= cell["admira_successes"] <= 3
            assert 0 <= cell["svt_successes"] <= 3

    def test_phase_success_counts_roughly_monotone_in_p(self):
        # more measurements should not lose more than the randomness
        # slack of 2 successes
        header, rows = run_phase([250, 500, 900], [1], n=40, trials=4, seed=2)
        counts = [dict(zip(header, row))["admira_successes"] for row in rows]
        for lo, hi in zip(counts, counts[1:]):
            assert hi >= lo - 2

    def test_csv_append_safe(self, tmp_path):
        out = tmp_path / "t1.csv"
        run_table1([20], trials=1, out_csv=str(out), seed=0)
        run_table1([20], trials=1, out_csv=str(out), seed=1)
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 3  # one header, two data rows
        assert lines[0].startswith("n,")

    def test_worker_count_does_not_change_results(self, tmp_path):
        h1, rows1 = run_table1([20], trials=3, seed=0, workers=1)
        h2, rows2 = run_table1([20], trials=3, seed=0, workers=2)
        assert rows1 == rows2

    def test_determinism_across_runs(self):
        _, a = run_phase([200], [1], n=20, trials=2, seed=5)
        _, b = run_phase([200], [1], n=20, trials=2, seed=5)
        assert a == b


class TestSolveOnce:
    def test_writes_files_and_record(self, tmp_path):
        spec = ProblemSpec(20, 20, 1, "sampling", 200, None, seed=0)
        op, b, X0, _ = generate_problem(spec)
        out = tmp_path / "run"
        record = solve_once(op, b, "admira", str(out), X0=X0, rank=1,
                            spec_hash=spec.hash())
        assert (out / "solution.txt").exists()
        assert (out / "report.json").exists()
        report = json.loads((out / "report.json").read_text())
        assert report["stop_reason"] in ("tol", "monotone_break", "max_iter")
        assert report["error_trace"] is not None
        assert len(report["residual_trace"]) == record.iterations
        sol = fileio.read_factored_matrix(out / "solution.txt")
        assert sol.shape == (20, 20)
        csv_lines = (out / "trials.csv").read_text().strip().splitlines()
        assert len(csv_lines) == 2

    def test_rerun_bit_identical_solution(self, tmp_path):
        spec = ProblemSpec(20, 20, 1, "sampling", 200, None, seed=3)
        op, b, X0, _ = generate_problem(spec)
        solve_once(op, b, "admira", str(tmp_path / "a"), X0=X0, rank=1)
        solve_once(op, b, "admira", str(tmp_path / "b"), X0=X0, rank=1)
        text_a = (tmp_path / "a" / "solution.txt").read_text()
        text_b = (tmp_path / "b" / "solution.txt").read_text()
        assert text_a == text_b

    def test_svt_path(self, tmp_path):
        spec = ProblemSpec(24, 24, 1, "sampling", 280, None, seed=1)
        op, b, X0, _ = generate_problem(spec)
        record = solve_once(op, b, "svt", str(tmp_path / "svt"), X0=X0)
        assert record.algo == "svt"
        assert record.iterations >= 1


class TestFileFormats:
    def test_dense_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((7, 5))
        path = tmp_path / "x.txt"
        fileio.write_dense_matrix(path, X)
        first = path.read_text().splitlines()[0]
        assert first == "7 5"
        np.testing.assert_array_equal(fileio.read_dense_matrix(path), X)

    def test_factored_round_trip_preserves_orthonormal_detection(self, tmp_path):
        rng = np.random.default_rng(1)
        F = full_svd(rng.standard_normal((6, 4)))
        path = tmp_path / "f.txt"
        fileio.write_factored_matrix(path, F)
        G = fileio.read_factored_matrix(path)
        assert G.orthonormal
        np.testing.assert_array_equal(G.sigmas, F.sigmas)
        np.testing.assert_array_equal(G.left, F.left)

    def test_sampling_operator_round_trip_one_indexed(self, tmp_path):
        op = SamplingOperator(4, 6, [0, 3], [5, 2])
        path = tmp_path / "op.txt"
        fileio.write_operator(path, op)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "4 6 2"
        assert lines[1] == "1 6"  # 1-indexed on disk
        back = fileio.read_operator(path)
        np.testing.assert_array_equal(back.rows, op.rows)
        np.testing.assert_array_equal(back.cols, op.cols)

    def test_gaussian_operator_regenerated_from_seed(self, tmp_path):
        op = GaussianOperator(5, 4, 30, seed=17)
        path = tmp_path / "gop.txt"
        fileio.write_operator(path, op)
        assert path.read_text().strip() == "5 4 30 17"
        back = fileio.read_operator(path)
        np.testing.assert_array_equal(back.frames, op.frames)

    def test_vector_round_trip(self, tmp_path):
        y = np.array([1.5, -2.25, 3e-17])
        path = tmp_path / "v.txt"
        fileio.write_vector(path, y)
        np.testing.assert_array_equal(fileio.read_vector(path), y)

    def test_corrupt_matrix_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 2\n1.0 2.0\n3.0 nan\n")
        with pytest.raises(ValueError):
            fileio.read_dense_matrix(path)
