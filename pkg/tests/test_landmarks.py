import numpy as np
import pytest

from posebridge import landmarks as lm
from posebridge import synth
from posebridge.kinematics import fk_batch, forward_kinematics, inverse_kinematics


class TestMeanShift:
    def test_degenerate_cluster_single_mode(self):
        point = np.array([1.0, -2.0, 0.5])
        pts = np.tile(point, (100, 1))
        res = lm.mean_shift(pts, bandwidth=0.7)
        assert res.modes.shape == (1, 3)
        assert np.allclose(res.modes[0], point, atol=1e-12)
        assert res.converged.all()
        assert (res.assignments == 0).all()

    def test_two_blob_recovery_against_generator_oracle(self):
        rng = np.random.default_rng(123)
        a = rng.normal(0.0, 0.5, (150, 3))
        b = rng.normal(0.0, 0.5, (150, 3)) + np.array([10.0, 0.0, 0.0])
        pts = np.vstack([a, b])
        res = lm.mean_shift(pts, bandwidth=2.0)
        assert len(res.modes) == 2
        # oracle: the sample means of the generating populations
        for mean in (a.mean(axis=0), b.mean(axis=0)):
            assert min(np.linalg.norm(res.modes - mean, axis=1)) < 0.25

    def test_huge_bandwidth_single_basin(self):
        rng = np.random.default_rng(5)
        pts = rng.uniform(-1.0, 1.0, (60, 4))
        res = lm.mean_shift(pts, bandwidth=50.0)
        assert len(res.modes) == 1

    def test_mode_count_non_increasing_in_bandwidth(self):
        rng = np.random.default_rng(9)
        centers = rng.uniform(-4.0, 4.0, (6, 3))
        pts = np.vstack([c + rng.normal(0.0, 0.25, (40, 3)) for c in centers])
        counts = [
            len(lm.mean_shift(pts, bw).modes) for bw in (0.3, 0.7, 1.5, 3.0, 12.0)
        ]
        assert all(b <= a for a, b in zip(counts, counts[1:]))
        assert counts[0] > counts[-1] == 1

    def test_modes_are_fixed_points(self):
        rng = np.random.default_rng(2)
        pts = np.vstack([
            rng.normal(0.0, 0.3, (50, 2)),
            rng.normal(0.0, 0.3, (50, 2)) + [4.0, 1.0],
        ])
        bw, tol = 1.0, 1e-7
        res = lm.mean_shift(pts, bw, tol=tol)
        for mode in res.modes:
            moved = lm.mean_shift_update(mode, pts, bw)
            assert np.linalg.norm(moved - mode) < tol

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        pts = rng.normal(size=(80, 3))
        r1 = lm.mean_shift(pts, 0.8)
        r2 = lm.mean_shift(pts, 0.8)
        assert np.array_equal(r1.modes, r2.modes)
        assert np.array_equal(r1.assignments, r2.assignments)

    def test_argument_validation(self):
        with pytest.raises(ValueError):
            lm.mean_shift(np.empty((0, 3)), 1.0)
        with pytest.raises(ValueError):
            lm.mean_shift(np.ones((3, 2)), 0.0)

    def test_default_bandwidth_is_low_percentile(self):
        rng = np.random.default_rng(0)
        pts = rng.normal(size=(200, 5))
        bw = lm.default_bandwidth(pts)
        d = np.sqrt((((pts[:, None] - pts[None]) ** 2).sum(2))[np.triu_indices(200, 1)])
        assert np.percentile(d, 5) < bw < np.percentile(d, 50)


class TestBuildLandmarks:
    def test_single_held_pose(self, desk):
        config = desk.benchmark_poses["pose_1"]
        pose = forward_kinematics(config, desk)
        frames = np.tile(pose, (40, 1))
        ls = lm.build_landmarks(frames, bandwidth=0.5, schema=desk)
        assert len(ls) == 1
        assert np.allclose(ls.human[0], pose, atol=1e-9)
        assert np.allclose(ls.humanoid[0], inverse_kinematics(pose, desk), atol=1e-9)

    def test_fk_image_recording_reproduces_configs(self, desk):
        rng = np.random.default_rng(3)
        configs = rng.uniform(desk.joint_min + 0.06, desk.joint_max - 0.06, (12, 10))
        # spread the configs far apart so each becomes its own landmark
        frames = np.repeat(fk_batch(configs, desk), 5, axis=0)
        ls = lm.build_landmarks(frames, bandwidth=0.05, schema=desk)
        assert len(ls) == 12
        for pose, config in zip(ls.human, ls.humanoid):
            rec = inverse_kinematics(pose, desk)
            assert np.abs(config - rec).max() < 1e-6

    def test_bandwidth_sweep_mirrors_reference_set_sizes(self, desk):
        # fixed synthetic capture session; the three calibrated bandwidths
        # yield landmark counts spanning the same two orders of magnitude
        # as the reference sweep (about 1644 / 961 / 86)
        _, poses = synth.synthetic_recording(desk, frames=1800, seed=4, jitter=0.05)
        counts = []
        for bw in (0.030, 0.036, 0.055):
            ls = lm.build_landmarks(poses, bw, desk, max_iter=400, tol=1e-6)
            counts.append(len(ls))
        assert 1400 <= counts[0] <= 1800
        assert 800 <= counts[1] <= 1250
        assert 50 <= counts[2] <= 200
        assert counts[0] > counts[1] > counts[2]
        assert counts[0] >= 15 * counts[2]

    def test_landmarks_respect_merge_tolerance(self, desk):
        _, poses = synth.synthetic_recording(desk, frames=300, seed=8, jitter=0.04)
        ls = lm.build_landmarks(poses, bandwidth=0.08, schema=desk)
        d2 = ((ls.human[:, None] - ls.human[None]) ** 2).sum(2)
        np.fill_diagonal(d2, np.inf)
        assert np.sqrt(d2.min()) >= ls.merge_tol

    def test_deterministic(self, desk):
        _, poses = synth.synthetic_recording(desk, frames=200, seed=1, jitter=0.04)
        a = lm.build_landmarks(poses, 0.1, desk)
        b = lm.build_landmarks(poses, 0.1, desk)
        assert np.array_equal(a.human, b.human)
        assert np.array_equal(a.humanoid, b.humanoid)

    def test_degenerate_modes_are_dropped_and_counted(self, desk):
        # a recording of a pose whose gaze is vertical: IK cannot resolve it
        pose = forward_kinematics(np.zeros(10), desk).copy()
        pose[3:6] = [0.0, 0.0, 1.0]
        frames = np.tile(pose, (30, 1))
        with pytest.raises(ValueError):
            lm.build_landmarks(frames, bandwidth=0.5, schema=desk)

    def test_empty_recording_rejected(self, desk):
        with pytest.raises(ValueError):
            lm.build_landmarks(np.empty((0, 24)), 0.5, desk)
        with pytest.raises(ValueError):
            lm.build_landmarks(np.ones((5, 7)), 0.5, desk)


class TestLandmarkSetIO:
    def test_save_load_round_trip_bitwise(self, desk, tmp_path):
        _, poses = synth.synthetic_recording(desk, frames=150, seed=6, jitter=0.04)
        ls = lm.build_landmarks(poses, 0.1, desk, source_digest="sha256:test")
        path = tmp_path / "landmarks.json"
        lm.save_landmarks(path, ls)
        clone = lm.load_landmarks(path)
        assert np.array_equal(clone.human, ls.human)
        assert np.array_equal(clone.humanoid, ls.humanoid)
        assert clone.bandwidth == ls.bandwidth
        assert clone.schema_digest == ls.schema_digest
        assert clone.source_digest == "sha256:test"
        # re-saving produces identical bytes
        path2 = tmp_path / "landmarks2.json"
        lm.save_landmarks(path2, clone)
        assert path.read_bytes() == path2.read_bytes()

    def test_from_pairs_validation(self, desk):
        poses = fk_batch(np.zeros((1, 10)), desk)
        with pytest.raises(ValueError):
            lm.landmarks_from_pairs(np.vstack([poses, poses]), np.zeros((2, 10)), desk)
        with pytest.raises(ValueError):
            lm.landmarks_from_pairs(poses, np.zeros((1, 9)), desk)

    def test_synth_sets_have_expected_size(self, desk):
        ls = synth.sample_landmark_set(desk, 64, seed=2)
        assert len(ls) == 64
        assert ls.human.shape == (64, 24)
        assert ls.humanoid.shape == (64, 10)
