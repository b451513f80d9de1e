"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line. Run with `pytest -s tests/test_acceptance.py` to see the
lines as they complete.
"""

import os
import subprocess
import sys
import time

import numpy as np
import pytest

from orthoalign import (
    AffinityMatrix,
    FeatureMap,
    RegionKind,
    RegionSpec,
    SolverConfig,
    Termination,
    align,
    build_kernel,
    knn_affinity,
    merge_user_regions,
    normalize_affinity,
    objective_cross,
    objective_full,
    procrustes_oracle,
    semantic_affinity,
    transfer_to_style,
)
from orthoalign.fixtures import (
    random_feature_map,
    well_conditioned_instance,
    write_fixture_job,
)
from orthoalign.solver import gradient_pc, gradient_ps, CrossKernel, ProjectionPair

from oracles import (
    brute_force_knn,
    brute_force_semantic,
    central_difference_gradient,
    pairwise_distances,
)


def _report(name: str, passed: bool):
    print(f"ACCEPTANCE {'PASS' if passed else 'FAIL'}: {name}")
    assert passed, name


def test_orthogonality_every_iterate():
    """50 random instances; every iterate keeps both projections orthogonal."""
    start = time.monotonic()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(50):
        channels = int(rng.choice([4, 8, 16]))
        n_c = int(rng.integers(30, 101))
        n_s = int(rng.integers(30, 101))
        content = random_feature_map(rng, channels, n_c, 1)
        style = random_feature_map(rng, channels, n_s, 1)
        na = normalize_affinity(knn_affinity(content, style, 5))
        _, report = align(content, style, na, SolverConfig(max_iterations=100))
        worst = max(worst, max(report.orthogonality_trace))
    elapsed = time.monotonic() - start
    _report(
        f"orthogonality <= 1e-8 on every iterate (worst {worst:.2e}) "
        f"in {elapsed:.2f}s < 5s",
        worst <= 1e-8 and elapsed < 5.0,
    )


def test_monotone_descent_and_fixed_traces():
    """Objective nonincreasing; the two self-trace terms stay constant."""
    rng = np.random.default_rng(7)
    ok = True
    for seed in range(5):
        content = random_feature_map(rng, 8, 40, 1)
        style = random_feature_map(rng, 8, 35, 1)
        na = normalize_affinity(knn_affinity(content, style, 5))
        kernel = build_kernel(content, style, na)
        trace = None
        fixed_values = []
        for iters in (1, 10, 40, 100):
            pair, report = align(content, style, na, SolverConfig(max_iterations=iters))
            if iters == 100:
                trace = report.objective_trace
            fixed_values.append(
                objective_full(pair, content, style, na)
                - objective_cross(pair, kernel)
            )
        ok &= all(b <= a + 1e-10 for a, b in zip(trace, trace[1:]))
        ref = fixed_values[0]
        ok &= all(abs(v - ref) <= 1e-8 * abs(ref) for v in fixed_values)
    _report("monotone descent + fixed trace terms", ok)


def test_procrustes_oracle_convergence():
    """20 well-conditioned instances converge to the closed-form optimum."""
    config = SolverConfig(max_iterations=200, epsilon=1e-9)
    ok = True
    worst_rel = 0.0
    worst_feat = 0.0
    for seed in range(20):
        content, style, na, kernel = well_conditioned_instance(1000 + seed)
        pair, report = align(content, style, na, config)
        transfer_opt, objective_opt = procrustes_oracle(kernel)
        rel = abs(report.objective_trace[-1] - objective_opt) / abs(objective_opt)
        stylized = transfer_to_style(content, pair)
        feat_err = float(np.linalg.norm(stylized.data - transfer_opt @ content.data))
        worst_rel = max(worst_rel, rel)
        worst_feat = max(worst_feat, feat_err)
        ok &= rel <= 1e-4 and feat_err <= 1e-3
    _report(
        f"procrustes oracle (worst rel {worst_rel:.2e}, worst feature "
        f"error {worst_feat:.2e})",
        ok,
    )


def test_gradient_finite_differences():
    """Analytic gradients match central differences on 10 random instances."""
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(10):
        kernel = CrossKernel(rng.standard_normal((6, 6)))
        q_c, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        q_s, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        pair = ProjectionPair(q_c, q_s)
        g = gradient_pc(pair, kernel)
        fd = central_difference_gradient(
            lambda m: -2.0 * np.trace(m.T @ kernel.k_matrix @ q_s), np.asarray(q_c)
        )
        worst = max(worst, np.linalg.norm(g - fd) / np.linalg.norm(fd))
        g = gradient_ps(pair, kernel)
        fd = central_difference_gradient(
            lambda m: -2.0 * np.trace(q_c.T @ kernel.k_matrix @ m), np.asarray(q_s)
        )
        worst = max(worst, np.linalg.norm(g - fd) / np.linalg.norm(fd))
    _report(f"gradient vs finite differences (worst rel {worst:.2e})", worst <= 1e-5)


def test_isometry_of_converged_transfer():
    """The transferred features keep the content Gram and distance structure."""
    ok = True
    for seed in range(3):
        content, style, na, _ = well_conditioned_instance(
            2000 + seed, n_content=30, n_style=30
        )
        pair, _ = align(content, style, na, SolverConfig(max_iterations=200))
        out = transfer_to_style(content, pair)
        dist_err = np.max(
            np.abs(pairwise_distances(out.data) - pairwise_distances(content.data))
        )
        gram_err = np.max(
            np.abs(out.data.T @ out.data - content.data.T @ content.data)
        )
        ok &= dist_err <= 1e-10 and gram_err <= 1e-10
    _report("isometry of the composite transfer map", ok)


def test_affinity_oracle_equivalence():
    """Exact match against brute force, including ties; monotone in k."""
    rng = np.random.default_rng(31)
    ok = True
    for case in range(30):
        channels = int(rng.integers(3, 9))
        n_c = int(rng.integers(10, 201))
        n_s = int(rng.integers(10, 201))
        content = random_feature_map(rng, channels, n_c, 1)
        style = random_feature_map(rng, channels, n_s, 1)
        if case % 3 == 0:
            # constructed ties: duplicate columns within and across sides
            data_c = np.asarray(content.data).copy()
            data_s = np.asarray(style.data).copy()
            data_c[:, 1] = data_c[:, 0]
            data_s[:, 2] = data_s[:, 1]
            data_s[:, 0] = data_c[:, 0]
            content = FeatureMap(channels, n_c, 1, data_c)
            style = FeatureMap(channels, n_s, 1, data_s)
        k = int(rng.integers(1, 6))
        got = knn_affinity(content, style, k).entries
        ok &= got == brute_force_knn(content.data, style.data, k)

    # semantic oracle on labeled instances
    for seed in range(5):
        r2 = np.random.default_rng(400 + seed)
        n_c = int(r2.integers(30, 151))
        n_s = int(r2.integers(30, 151))
        content = random_feature_map(r2, 4, n_c, 1)
        style = random_feature_map(r2, 4, n_s, 1)
        c_labels = r2.choice([0, 1, 2, 3], size=n_c)
        s_labels = r2.choice([0, 1, 2, 3], size=n_s)
        for label in (1, 2, 3):
            c_labels[label * 5 : label * 5 + 5] = label
            s_labels[label * 5 : label * 5 + 5] = label
        spec = RegionSpec(RegionKind.SEMANTIC_SEGMENTATION, c_labels, s_labels)
        got = semantic_affinity(content, style, 3, spec).entries
        ok &= got == brute_force_semantic(content.data, style.data, c_labels, s_labels, 3)

    # monotonicity across the k ablation axis
    content = random_feature_map(rng, 4, 60, 1)
    style = random_feature_map(rng, 4, 55, 1)
    previous = set()
    for k in range(1, 9):
        current = knn_affinity(content, style, k).entries
        ok &= previous <= current
        previous = set(current)
    _report("affinity brute-force equivalence + k monotonicity", ok)


def test_user_edit_and_semantic_semantics():
    """Merged affinity is base OR region cross-product; no cross-label pairs."""
    rng = np.random.default_rng(55)
    ok = True
    for seed in range(5):
        n_c, n_s = 20, 16
        base_pairs = frozenset(
            (int(rng.integers(n_c)), int(rng.integers(n_s))) for _ in range(15)
        )
        base = AffinityMatrix(n_c, n_s, base_pairs)
        c_labels = rng.choice([0, 1, 2], size=n_c)
        s_labels = rng.choice([0, 1, 2], size=n_s)
        c_labels[:2], s_labels[:2] = [1, 2], [1, 2]
        spec = RegionSpec(RegionKind.USER_CORRESPONDENCE, c_labels, s_labels)
        merged = merge_user_regions(base, spec)
        expected = set(base_pairs)
        for label in (1, 2):
            for i in np.flatnonzero(c_labels == label):
                for j in np.flatnonzero(s_labels == label):
                    expected.add((int(i), int(j)))
        ok &= merged.entries == expected

    for seed in range(5):
        r2 = np.random.default_rng(600 + seed)
        content = random_feature_map(r2, 4, 30, 1)
        style = random_feature_map(r2, 4, 30, 1)
        c_labels = r2.choice([0, 1, 2], size=30)
        s_labels = r2.choice([0, 1, 2], size=30)
        for label in (1, 2):
            c_labels[label * 6 : label * 6 + 6] = label
            s_labels[label * 6 : label * 6 + 6] = label
        spec = RegionSpec(RegionKind.SEMANTIC_SEGMENTATION, c_labels, s_labels)
        a = semantic_affinity(content, style, 2, spec)
        ok &= all(
            c_labels[i] == s_labels[j] and c_labels[i] != 0 for i, j in a.entries
        )
    _report("user-edit merge semantics + zero cross-label entries", ok)


def test_pipeline_determinism(tmp_path):
    """Bit-identical outputs across runs and across BLAS thread counts."""
    digests = []
    for run, threads in enumerate(("1", "1", "1", "4")):
        run_dir = tmp_path / f"run{run}"
        manifest_path = write_fixture_job(run_dir, seed=12)
        env = dict(os.environ)
        env.update(
            OMP_NUM_THREADS=threads,
            OPENBLAS_NUM_THREADS=threads,
            MKL_NUM_THREADS=threads,
        )
        cp = subprocess.run(
            [sys.executable, "-m", "orthoalign.cli", "run", "--manifest", str(manifest_path)],
            capture_output=True,
            text=True,
            env=env,
        )
        assert cp.returncode == 0, cp.stderr
        digests.append(
            (
                (run_dir / "stylized.oatf").read_bytes(),
                (run_dir / "p_c.oatf").read_bytes(),
                (run_dir / "report.txt").read_bytes(),
            )
        )
    ok = all(d == digests[0] for d in digests[1:])
    _report("pipeline determinism across runs and thread counts", ok)


def test_performance_budget(tmp_path):
    """C=64 with 32x32 sides completes 100 iterations in under 10 s."""
    rng = np.random.default_rng(77)
    content = random_feature_map(rng, 64, 32, 32)
    style = random_feature_map(rng, 64, 32, 32)
    start = time.monotonic()
    na = normalize_affinity(knn_affinity(content, style, 5))
    # epsilon 0 forces the full 100-iteration budget
    pair, report = align(
        content, style, na, SolverConfig(max_iterations=100, epsilon=0.0)
    )
    elapsed = time.monotonic() - start
    ok = report.iterations_run == 100 and elapsed < 10.0
    _report(f"performance budget ({elapsed:.2f}s for 100 iterations)", ok)
