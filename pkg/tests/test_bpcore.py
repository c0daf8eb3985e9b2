import math

import numpy as np
import pytest

from rankbp import bpcore, graphgen, experiments, verify
from rankbp.bpcore import MbpSpec, MarkedTree, induced_mark_rates
from rankbp.errors import ConstructionError, IntegrityError, PreconditionError, SizeError
from rankbp.matrixlab import DotDecomp, SymMatrix, rank2_spectral
from rankbp.rng import replicate_stream
from rankbp.twinpart import TwinPartition, twin_partition

from instances import instance, kernel

LN2 = math.log(2)
STAR = np.array([[0, 1, 1, 1], [1, 0, 0, 0], [1, 0, 0, 0], [1, 0, 0, 0]], dtype=float)
K22 = np.array([[0, 0, 1, 1], [0, 0, 1, 1], [1, 1, 0, 0], [1, 1, 0, 0]], dtype=float)


def test_mbpspec_validation():
    with pytest.raises(PreconditionError):
        MbpSpec([[1.0]], [[0.5, 0.5]])
    with pytest.raises(PreconditionError):
        MbpSpec([[-1.0]], [[1.0]])
    with pytest.raises(PreconditionError):
        MbpSpec([[1.0], [0.0]], [[0.0, 0.0]])
    with pytest.raises(PreconditionError):
        MbpSpec([[1.0], [0.0]], [[0.3, 0.3]])
    s = MbpSpec([[0.0], [0.0]], [[0.0, 0.0]])
    assert s.inert.tolist() == [True]


def test_bp_n_examples():
    s = bpcore.build_bp_n(SymMatrix(np.zeros((3, 3))))
    assert not s.birth_rate.any()
    s = bpcore.build_bp_n(SymMatrix([[0, 1], [1, 0]]))
    assert np.array_equal(s.birth_rate, [[0, 1], [1, 0]])
    assert np.array_equal(s.mark_probs, np.eye(2))
    a = SymMatrix([[0.2, 1.5], [1.5, 0.0]], ell=0.3)
    assert np.array_equal(induced_mark_rates(bpcore.build_bp_n(a)), 0.3 * a.entries)


def test_mbp1_examples():
    s = bpcore.build_mbp1([1, 2], 0.5)
    assert np.allclose(s.birth_rate[:, 0], [1.5, 3.0])
    assert np.allclose(s.mark_probs[0], [1 / 3, 2 / 3])
    assert np.allclose(induced_mark_rates(s), [[0.5, 1], [1, 2]])
    s = bpcore.build_mbp1([1], 0.7)
    assert s.birth_rate[0, 0] == pytest.approx(0.7) and s.mark_probs[0, 0] == 1
    s = bpcore.build_mbp1([1, 1, 1, 1], 1.0)
    assert np.allclose(s.birth_rate, 4) and np.allclose(induced_mark_rates(s), 1)
    with pytest.raises(PreconditionError):
        bpcore.build_mbp1([0, 0], 1.0)


def test_dot_examples():
    s = bpcore.build_mbp_dot(DotDecomp([[1, 0], [0, 1]]), 1.0)
    assert np.allclose(induced_mark_rates(s), np.eye(2))
    s = bpcore.build_mbp_dot(DotDecomp([[1, 1], [1, 1]]), 1.0)
    assert np.allclose(induced_mark_rates(s), 2)
    single = bpcore.build_mbp_dot(DotDecomp([[1, 2]]), 0.5)
    assert np.allclose(single.birth_rate, bpcore.build_mbp1([1, 2], 0.5).birth_rate)
    s = bpcore.build_mbp_dot(DotDecomp([[1, 2], [0, 0]]), 1.0)
    assert s.inert.tolist() == [False, True]


def test_rank2_indefinite_example():
    dec = rank2_spectral(np.array([[0.0, 1], [1, 0]]))
    s = bpcore.build_mbp2_indefinite(dec, 1.0)
    # mark-1 parents get only the type whose marks land on mark 2
    r = s.birth_rate[0]
    live = int(np.argmax(r))
    assert r[1 - live] == pytest.approx(0, abs=1e-15) and r[live] == pytest.approx(1)
    assert s.mark_probs[live] == pytest.approx([0, 1], abs=1e-15)
    assert np.allclose(induced_mark_rates(s), [[0, 1], [1, 0]], atol=1e-15)


def test_rank2_posdef_examples():
    s = bpcore.build_mbp2_posdef(SymMatrix([[2, 1], [1, 2]]))
    assert np.allclose(induced_mark_rates(s), [[2, 1], [1, 2]], atol=1e-12)
    s = bpcore.build_mbp_rank2(SymMatrix(np.eye(2)))
    assert np.allclose(induced_mark_rates(s), np.eye(2), atol=1e-12)


def test_rank2_near_rank1_limit():
    x = np.array([1.0, 2.0, 0.5])
    y = 1e-4 * np.array([1.0, -1.0, 0.5])
    a = np.outer(x, x) - np.outer(y, y)
    s = bpcore.build_mbp_rank2(SymMatrix(a, 0.8))
    assert np.allclose(induced_mark_rates(s), 0.8 * a, atol=1e-9)


def test_kl_examples():
    part = twin_partition(STAR)
    s = bpcore.build_mbp_kl(STAR, part, 1.0)
    assert s.birth_rate[0].tolist() == [0.0, 3.0]
    assert np.allclose(s.mark_probs[1], [0, 1 / 3, 1 / 3, 1 / 3])
    assert np.allclose(induced_mark_rates(s), STAR)
    empty = np.zeros((3, 3))
    assert not bpcore.build_mbp_kl(empty, twin_partition(empty), 1.0).birth_rate.any()
    s = bpcore.build_mbp_kl(K22, twin_partition(K22), 0.4)
    assert np.allclose(induced_mark_rates(s), 0.4 * K22)


def test_kl_rejects_wrong_partition():
    bogus = TwinPartition(((0, 1), (2, 3)), (0, 0, 1, 1), np.array([[0, 1], [1, 0]]))
    with pytest.raises(IntegrityError):
        bpcore.build_mbp_kl(STAR, bogus, 1.0)


def test_kl_perturbed_examples():
    part = twin_partition(STAR)
    s = bpcore.build_mbp_kl_perturbed(STAR, [2, 1, 1, 1], part, 1.0)
    assert s.birth_rate[0, 1] == pytest.approx(6)
    assert np.allclose(induced_mark_rates(s)[0, 1:], 2)
    plain = bpcore.build_mbp_kl(STAR, part, 0.6)
    unit = bpcore.build_mbp_kl_perturbed(STAR, np.ones(4), part, 0.6)
    assert np.array_equal(plain.birth_rate, unit.birth_rate)
    assert np.array_equal(plain.mark_probs, unit.mark_probs)
    w = np.array([0.0, 1.0, 2.0, 3.0])
    r = induced_mark_rates(bpcore.build_mbp_kl_perturbed(K22, w, twin_partition(K22), 1.0))
    assert not r[0].any() and not r[:, 0].any()
    assert np.allclose(r, w[:, None] * K22 * w[None, :])


def test_signed_examples():
    s = bpcore.build_mbp_signed([[2, 2], [1, -1]], 1.0)
    assert s.n_types == 2
    assert np.allclose(induced_mark_rates(s), [[5, 3], [3, 5]], atol=1e-15)
    single = bpcore.build_mbp_signed([[1, 2]], 0.5)
    assert np.allclose(single.birth_rate, bpcore.build_mbp1([1, 2], 0.5).birth_rate)
    s = bpcore.build_mbp_signed([[1, 3], [0, 0]], 1.0)
    assert np.allclose(induced_mark_rates(s), [[1, 3], [3, 9]])
    with pytest.raises(ConstructionError) as err:
        bpcore.build_mbp_signed([[1, 0], [5, 0]], 1.0)
    assert err.value.index == 0 and "index 1" in str(err.value)
    with pytest.raises(SizeError):
        bpcore.build_mbp_signed(np.ones((21, 2)), 1.0)


def test_single_type_rate_factorizes():
    u = np.array([1.0, 2.0, 0.0])
    q = np.array([0.25, 0.25, 0.5])
    s = MbpSpec((3.0 * u)[:, None], q[None, :])
    assert np.allclose(induced_mark_rates(s), 3.0 * np.outer(u, q))


@pytest.mark.parametrize("construction", bpcore.CONSTRUCTIONS)
def test_random_rate_certificates(construction):
    rng = np.random.default_rng(sum(map(ord, construction)))
    for _ in range(25):
        ell, inputs = instance(construction, rng)
        spec = bpcore.build(construction, ell, **inputs)
        target = ell * kernel(construction, inputs)
        assert experiments.rate_deviation(spec, target) <= 1e-9
        r = induced_mark_rates(spec)
        assert np.allclose(r, r.T, atol=1e-9 * max(1.0, np.abs(r).max()))


def test_simulate_examples():
    zero = bpcore.build_bp_n(SymMatrix(np.zeros((3, 3))))
    t = bpcore.simulate(zero, 1, 5, replicate_stream(0))
    assert t.size == 1 and t.parent.tolist() == [-1] and t.mark.tolist() == [1]
    busy = bpcore.build_bp_n(SymMatrix(np.ones((3, 3)), 5.0))
    assert bpcore.simulate(busy, 0, 0, replicate_stream(0)).size == 1
    with pytest.raises(PreconditionError):
        bpcore.simulate(busy, 3, 1, replicate_stream(0))


def test_simulate_void_probability():
    s = bpcore.build_mbp1([1, 1], LN2)
    reps = 4000
    hits = 0
    for r in range(reps):
        t = bpcore.simulate(s, 0, 1, replicate_stream(5, r))
        hits += bool(np.any(t.mark[1:] == 1))
    assert abs(hits - reps / 2) / math.sqrt(reps / 4) < 4


def test_tree_invariants_and_truncation():
    s = bpcore.build_bp_n(SymMatrix(np.ones((4, 4)), 2.0))
    t = bpcore.simulate(s, 0, 6, replicate_stream(3))
    assert np.all(t.generation[t.parent[1:]] == t.generation[1:] - 1)
    assert np.all(t.parent[1:] < np.arange(1, t.size))
    assert np.all(np.diff(t.generation) >= 0)
    capped = bpcore.simulate(s, 0, 50, replicate_stream(3), max_population=40)
    assert capped.truncated and capped.size <= 40


def _tree(parent, gen, typ, mark, n_marks, depth):
    arr = lambda x: np.asarray(x, dtype=np.int64)
    return MarkedTree(arr(parent), arr(gen), arr(typ), arr(mark), n_marks, depth)


def test_thin_examples():
    t = _tree([-1, 0, 0, 1], [0, 1, 1, 2], [-1, 0, 0, 0], [0, 1, 2, 3], 4, 2)
    flagged, shells = bpcore.thin(t)
    assert not flagged.thinned.any() and shells.shells == ((0,), (1, 2), (3,))
    t = _tree([-1, 0, 0], [0, 1, 1], [-1, 0, 0], [0, 1, 1], 2, 1)
    flagged, shells = bpcore.thin(t)
    assert flagged.thinned.tolist() == [0, 0, 1] and shells.shells == ((0,), (1,))
    t = _tree([-1, 0, 0, 1, 2], [0, 1, 1, 2, 2], [-1, 0, 0, 0, 0], [0, 0, 1, 2, 3], 4, 2)
    flagged, shells = bpcore.thin(t)
    assert flagged.thinned.tolist() == [0, 1, 0, 1, 0] and shells.shells == ((0,), (1,), (3,))


def _law_check(construction, ell, inputs, root, depth, reps, seed):
    spec = bpcore.build(construction, ell, **inputs)
    a = SymMatrix(kernel(construction, inputs), ell)
    exact = graphgen.shell_distribution_exact(a, root, depth)
    hist = experiments.sequence_histogram(experiments.bp_shell_runs(spec, root, depth, reps, seed))
    return verify.chi_square_gof(hist, exact)


@pytest.mark.parametrize("construction", bpcore.CONSTRUCTIONS)
def test_thinned_bp_law_matches_exploration(construction):
    rng = np.random.default_rng(sum(map(ord, construction)))
    while True:
        ell, inputs = instance(construction, rng, n=5, k=3 if construction in ("dot", "signed") else None)
        if kernel(construction, inputs)[0, 1:].any():
            break
    ell = 0.6 / max(1e-9, kernel(construction, inputs).sum(axis=1).mean()) * 2
    _, p, _ = _law_check(construction, ell, inputs, 0, 2, 6000, 17)
    assert p > 1e-3


def test_graph_shells_match_thinned_bp_two_sample():
    rng = np.random.default_rng(9)
    a = rng.uniform(0, 1, (6, 6))
    a = SymMatrix(np.triu(a) + np.triu(a, 1).T, 0.7)
    spec = bpcore.build_bp_n(a)
    report, _, _ = experiments.equivalence_mc(a, 2, 3, 6000, 4, spec=spec)
    assert report["p_value"] > 1e-3


def test_thinned_marks_globally_distinct():
    rng = np.random.default_rng(21)
    spec = bpcore.build("signed", 0.9, vectors=instance("signed", rng, n=8, k=3)[1]["vectors"])
    for r in range(200):
        s = bpcore.thinned_shells(spec, r % 8, 5, replicate_stream(21, r))
        flat = [m for shell in s.shells for m in shell]
        assert len(flat) == len(set(flat))


@pytest.mark.slow
@pytest.mark.parametrize("construction", [c for c in bpcore.CONSTRUCTIONS if c != "full-n"])
def test_shell_sizes_match_bp_n_two_sample(construction):
    # each construction against the n-type process on its own kernel, 1e5 replicates a side
    rng = np.random.default_rng(100 + sum(map(ord, construction)))
    while True:
        ell, inputs = instance(construction, rng, n=6, k=3 if construction in ("dot", "signed") else None)
        a = kernel(construction, inputs)
        if a[0, 1:].any():
            break
    ell = 1.2 / a.sum(axis=1).mean()
    spec = bpcore.build(construction, ell, **inputs)
    ref = bpcore.build_bp_n(SymMatrix(a, ell))
    reps = 100_000
    h1 = experiments.size_histogram(experiments.bp_shell_runs(spec, 0, 2, reps, 31, stream=1), 2)
    h2 = experiments.size_histogram(experiments.bp_shell_runs(ref, 0, 2, reps, 31, stream=2), 2)
    _, p, _ = verify.two_sample_chi_square(h1, h2)
    assert p > 1e-3


@pytest.mark.slow
@pytest.mark.parametrize("name", ["path", "star", "weighted"])
def test_bp_n_shell_law_within_three_se(name):
    if name == "path":
        a = np.diag([1.0, 1.0, 1.0], 1)
        a = a + a.T
    elif name == "star":
        a = np.zeros((4, 4))
        a[0, 1:] = a[1:, 0] = 1
    else:
        a = np.array([[0.3, 1, 0.5, 0.2], [1, 0, 1.5, 0], [0.5, 1.5, 0, 0.7], [0.2, 0, 0.7, 0.1]])
    m = SymMatrix(a, 0.9)
    exact = graphgen.shell_distribution_exact(m, 1, 3)
    reps = 100_000
    hist = experiments.sequence_histogram(experiments.bp_shell_runs(bpcore.build_bp_n(m), 1, 3, reps, 5))
    assert set(hist) <= set(exact)
    for key, p in exact.items():
        se = math.sqrt(p * (1 - p) / reps)
        assert abs(hist.get(key, 0) / reps - p) <= 3 * se + 1e-12, key
