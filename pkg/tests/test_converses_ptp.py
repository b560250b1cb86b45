import numpy as np
import pytest

from fbconv.converses_ptp import (
    TiltedInfo,
    alpha_sup_form,
    hypothesis_testing_bound,
    kv_tilted_at,
    kv_tilted_improved,
    lossless_gamma_at,
    lossless_gamma_bound,
    meta_je,
    meta_lossless,
    meta_lossy,
    meta_lossy_z,
    meta_sid,
    np_alpha,
    palzer_timo,
    palzer_timo_at,
    sid_classic,
    sid_classic_at,
    sid_improved,
    sid_improved_at,
)
from fbconv.oracle import exact_opt_sc, exact_opt_sid
from fbconv.probability import (
    CodeSizes,
    DistortionSpec,
    JointPmf,
    SinglePmf,
    ZeroProbability,
)
from fbconv.relaxations import ScInstance, SwInstance, build_lp_sc, sw_je_instance
from fbconv.lp_core import solve

from conftest import random_joint, random_single


def _lossless(p, M):
    src = SinglePmf(p)
    return ScInstance(src, M, DistortionSpec.lossless(src.alphabet_size))


def _sw(mass, M1, M2):
    return SwInstance(JointPmf(mass), CodeSizes(M1, M2))


def _dsbs1(p=0.25):
    return JointPmf([[(1 - p) / 2, p / 2], [p / 2, (1 - p) / 2]])


# --- meta_lossy -------------------------------------------------------------


def test_meta_lossy_uniform4():
    rep = meta_lossy(_lossless([0.25] * 4, 2))
    assert rep.raw_value == pytest.approx(0.5, abs=1e-9)
    assert rep.clamped_value == rep.raw_value


def test_meta_lossy_skewed():
    rep = meta_lossy(_lossless([0.7, 0.2, 0.1], 1))
    assert rep.raw_value == pytest.approx(0.3, abs=1e-9)


def test_meta_lossy_witness_reevaluates():
    rng = np.random.default_rng(7)
    for _ in range(20):
        src = random_single(rng, int(rng.integers(2, 6)))
        inst = ScInstance(src, int(rng.integers(1, 4)),
                          DistortionSpec.lossless(src.alphabet_size))
        rep = meta_lossy(inst)
        again = meta_lossy_z(inst, rep.witness["phi"])
        assert again.raw_value == pytest.approx(rep.raw_value, abs=1e-9)


def test_meta_lossy_lossy_example():
    # radius-1 distortion on a path: every reconstruction covers itself and
    # its neighbors, so M=1 already covers 3 of the 4 symbols
    d = np.array([[0, 1, 2, 3], [1, 0, 1, 2], [2, 1, 0, 1], [3, 2, 1, 0]], float)
    inst = ScInstance(SinglePmf([0.25] * 4), 1, DistortionSpec(d, 1.0))
    rep = meta_lossy(inst)
    assert rep.raw_value == pytest.approx(0.25, abs=1e-9)
    assert exact_opt_sc(inst) == pytest.approx(0.25, abs=1e-12)


def test_meta_lossy_below_oracle_and_lp():
    rng = np.random.default_rng(11)
    for _ in range(25):
        n = int(rng.integers(2, 5))
        src = random_single(rng, n)
        M = int(rng.integers(1, n + 1))
        d = rng.integers(0, 3, size=(n, n)).astype(float)
        np.fill_diagonal(d, 0.0)
        inst = ScInstance(src, M, DistortionSpec(d, float(rng.choice([0.0, 1.0]))))
        rep = meta_lossy(inst)
        assert rep.raw_value <= exact_opt_sc(inst) + 1e-9
        assert rep.raw_value <= solve(build_lp_sc(inst)).value + 1e-7


def test_meta_lossy_z_rejects_bad_input():
    inst = _lossless([0.5, 0.5], 1)
    with pytest.raises(Exception):
        meta_lossy_z(inst, [-0.1, 0.2])
    with pytest.raises(Exception):
        meta_lossy_z(inst, [0.1, 0.2, 0.3])


# --- tilted and tail bounds -------------------------------------------------


def test_kv_matches_explicit_lossless_tilt():
    rng = np.random.default_rng(3)
    for _ in range(10):
        src = random_single(rng, 4, allow_zeros=False)
        inst = ScInstance(src, 2, DistortionSpec.lossless(4))
        a = kv_tilted_improved(inst)
        b = kv_tilted_improved(inst, TiltedInfo.lossless(src))
        assert a.raw_value == pytest.approx(b.raw_value, abs=1e-9)


def test_tilted_info_rejects_zero_mass():
    with pytest.raises(ZeroProbability):
        TiltedInfo.lossless(SinglePmf([1.0, 0.0]))


def test_lossless_chain():
    # lossless_gamma <= kv (lossless tilt) <= meta_lossless, pointwise in value
    rng = np.random.default_rng(19)
    for _ in range(40):
        n = int(rng.integers(2, 7))
        src = random_single(rng, n, allow_zeros=False)
        M = int(rng.integers(1, n + 1))
        inst = ScInstance(src, M, DistortionSpec.lossless(n))
        g = lossless_gamma_bound(src, M).raw_value
        k = kv_tilted_improved(inst).raw_value
        m = meta_lossless(src, M).raw_value
        assert g <= k + 1e-9
        assert k <= m + 1e-9


def test_kv_below_meta_lossy_on_lossy_instances():
    rng = np.random.default_rng(23)
    for _ in range(15):
        n = int(rng.integers(2, 5))
        src = random_single(rng, n)
        d = rng.integers(0, 3, size=(n, n)).astype(float)
        np.fill_diagonal(d, 0.0)
        inst = ScInstance(src, int(rng.integers(1, 3)), DistortionSpec(d, 1.0))
        assert kv_tilted_improved(inst).raw_value <= meta_lossy(inst).raw_value + 1e-9


def test_kv_witness_reevaluates():
    rng = np.random.default_rng(29)
    for _ in range(20):
        src = random_single(rng, 5, allow_zeros=False)
        inst = ScInstance(src, 2, DistortionSpec.lossless(5))
        rep = kv_tilted_improved(inst)
        assert kv_tilted_at(inst, rep.witness["t"]) == pytest.approx(
            rep.raw_value, abs=1e-9)


def test_palzer_timo_values():
    assert palzer_timo(_lossless([0.25] * 4, 2)).raw_value == pytest.approx(
        0.5, abs=1e-9)
    assert palzer_timo(_lossless([0.7, 0.3], 1)).raw_value == pytest.approx(
        0.3, abs=1e-9)


def test_palzer_timo_witness_and_oracle():
    rng = np.random.default_rng(31)
    for _ in range(20):
        n = int(rng.integers(2, 6))
        src = random_single(rng, n)
        M = int(rng.integers(1, n + 1))
        inst = ScInstance(src, M, DistortionSpec.lossless(n))
        rep = palzer_timo(inst)
        assert palzer_timo_at(inst, rep.witness["beta"]) == pytest.approx(
            rep.raw_value, abs=1e-9)
        assert rep.raw_value <= exact_opt_sc(inst) + 1e-9


# --- Neyman-Pearson ---------------------------------------------------------


def test_np_alpha_example():
    assert np_alpha(SinglePmf([0.5, 0.5]), SinglePmf([0.9, 0.1]), 0.1) \
        == pytest.approx(0.5, abs=1e-12)


def test_np_alpha_trivial_cases():
    P = SinglePmf([0.3, 0.7])
    Q = SinglePmf([0.5, 0.5])
    assert np_alpha(P, Q, 1.0) == 0.0
    assert np_alpha(P, Q, 0.0) == pytest.approx(1.0, abs=1e-12)
    assert np_alpha(P, P, 0.25) == pytest.approx(0.75, abs=1e-12)


def test_np_alpha_equals_sup_form():
    rng = np.random.default_rng(37)
    for _ in range(300):
        n = int(rng.integers(2, 7))
        P = random_single(rng, n)
        Q = random_single(rng, n)
        theta = float(rng.uniform(0, 1))
        assert np_alpha(P, Q, theta) == pytest.approx(
            alpha_sup_form(P, Q, theta), abs=1e-9)


def test_ht_uniform_and_vacuous():
    rep = hypothesis_testing_bound(_lossless([0.25] * 4, 1))
    assert rep.raw_value == pytest.approx(0.75, abs=1e-9)
    assert not rep.vacuous
    vac = hypothesis_testing_bound(_lossless([0.5, 0.5], 2))
    assert vac.vacuous and vac.raw_value == 0.0


def test_ht_below_meta_lossy():
    rng = np.random.default_rng(41)
    for _ in range(25):
        n = int(rng.integers(2, 6))
        src = random_single(rng, n)
        inst = ScInstance(src, int(rng.integers(1, n)), DistortionSpec.lossless(n))
        Q = random_single(rng, n, allow_zeros=False)
        for ref in (None, Q):
            assert hypothesis_testing_bound(inst, ref).raw_value \
                <= meta_lossy(inst).raw_value + 1e-9


# --- lossless forms ---------------------------------------------------------


def test_meta_lossless_values():
    assert meta_lossless(SinglePmf([0.25] * 4), 2).raw_value == pytest.approx(
        0.5, abs=1e-9)
    assert meta_lossless(SinglePmf([0.7, 0.3]), 1).raw_value == pytest.approx(
        0.3, abs=1e-9)


def test_meta_lossless_caps_equal_lp():
    rng = np.random.default_rng(43)
    for _ in range(30):
        src = random_single(rng, int(rng.integers(2, 7)))
        M = int(rng.integers(1, 5))
        a = meta_lossless(src, M, method="caps").raw_value
        b = meta_lossless(src, M, method="lp").raw_value
        assert a == pytest.approx(b, abs=1e-9)


def test_meta_lossless_witness_reevaluates():
    rng = np.random.default_rng(47)
    for _ in range(20):
        src = random_single(rng, 5)
        rep = meta_lossless(src, 2)
        phi = np.asarray(rep.witness["phi"])
        assert phi.sum() - 2 * phi.max() == pytest.approx(rep.raw_value, abs=1e-9)


def test_lossless_gamma_values():
    assert lossless_gamma_bound(SinglePmf([0.7, 0.3]), 1).raw_value \
        == pytest.approx(0.3, abs=1e-9)
    assert lossless_gamma_bound(SinglePmf([0.25] * 4), 2).raw_value \
        == pytest.approx(0.5, abs=1e-9)


def test_lossless_gamma_witness_reevaluates():
    rng = np.random.default_rng(53)
    for _ in range(25):
        src = random_single(rng, int(rng.integers(2, 7)))
        M = int(rng.integers(1, 4))
        rep = lossless_gamma_bound(src, M)
        assert lossless_gamma_at(src, M, rep.witness["t"]) == pytest.approx(
            rep.raw_value, abs=1e-9)


# --- pair bounds ------------------------------------------------------------


def test_meta_je_values():
    rep = meta_je(_sw(_dsbs1().mass, 1, 1))
    assert rep.raw_value == pytest.approx(0.625, abs=1e-9)
    assert rep.witness["phi"].shape == (2, 2)
    assert meta_je(_sw([[0.5, 0.0], [0.0, 0.5]], 1, 1)).raw_value \
        == pytest.approx(0.5, abs=1e-9)


def test_meta_sid_values():
    indep = _sw([[0.25, 0.25], [0.25, 0.25]], 1, 1)
    assert meta_sid(indep, 1).raw_value == pytest.approx(0.5, abs=1e-9)
    assert meta_sid(indep, 2).raw_value == pytest.approx(0.5, abs=1e-9)
    diag = _sw([[0.5, 0.0], [0.0, 0.5]], 1, 1)
    assert meta_sid(diag, 1).raw_value == pytest.approx(0.0, abs=1e-9)


def test_meta_sid_below_oracle():
    rng = np.random.default_rng(59)
    for _ in range(15):
        joint = random_joint(rng, int(rng.integers(2, 4)), int(rng.integers(2, 4)))
        inst = SwInstance(joint, CodeSizes(int(rng.integers(1, 3)),
                                           int(rng.integers(1, 3))))
        for which in (1, 2):
            rep = meta_sid(inst, which)
            assert rep.raw_value <= exact_opt_sid(inst, which) + 1e-9
            phi = rep.witness["phi"]
            P = inst.joint.mass
            assert np.all(phi >= -1e-9) and np.all(phi <= P + 1e-9)
            M = inst.sizes.M1 if which == 1 else inst.sizes.M2
            val = phi.sum() - M * (phi.max(axis=0).sum() if which == 1
                                   else phi.max(axis=1).sum())
            assert val == pytest.approx(rep.raw_value, abs=1e-9)


def test_sid_chain_and_anchor():
    indep = _sw([[0.25, 0.25], [0.25, 0.25]], 1, 1)
    assert sid_improved(indep, 1).raw_value == pytest.approx(0.5, abs=1e-9)
    assert sid_classic(indep, 1).raw_value == pytest.approx(0.5, abs=1e-9)
    rng = np.random.default_rng(61)
    for _ in range(40):
        joint = random_joint(rng, int(rng.integers(2, 5)), int(rng.integers(2, 5)))
        inst = SwInstance(joint, CodeSizes(int(rng.integers(1, 4)),
                                           int(rng.integers(1, 4))))
        for which in (1, 2):
            c = sid_classic(inst, which).raw_value
            i = sid_improved(inst, which).raw_value
            m = meta_sid(inst, which).raw_value
            assert c <= i + 1e-9
            assert i <= m + 1e-9


def test_sid_witnesses_reevaluate():
    rng = np.random.default_rng(67)
    for _ in range(20):
        joint = random_joint(rng, 3, 3)
        inst = SwInstance(joint, CodeSizes(2, 2))
        for which in (1, 2):
            ri = sid_improved(inst, which)
            rc = sid_classic(inst, which)
            assert sid_improved_at(inst, ri.witness["t"], which) \
                == pytest.approx(ri.raw_value, abs=1e-9)
            assert sid_classic_at(inst, rc.witness["t"], which) \
                == pytest.approx(rc.raw_value, abs=1e-9)


def test_meta_je_below_flat_oracle():
    rng = np.random.default_rng(71)
    for _ in range(10):
        joint = random_joint(rng, 2, 3)
        inst = SwInstance(joint, CodeSizes(2, 1))
        rep = meta_je(inst)
        assert rep.raw_value <= exact_opt_sc(sw_je_instance(inst)) + 1e-9


def test_report_fields():
    rep = meta_lossless(SinglePmf([0.6, 0.4]), 3)
    assert rep.clamped_value == max(0.0, rep.raw_value)
    assert rep.paper_eq and isinstance(rep.paper_eq, str)
    assert rep.name == "meta-lossless"
