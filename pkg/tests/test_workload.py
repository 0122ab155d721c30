import itertools
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from flatdse import AttentionWorkload, HardwareConfig, OpKind
from flatdse.errors import ConfigError, DegenerateOperator
from flatdse.workload import (
    OperatorSpec,
    access_counts,
    block_macs,
    derive_operators,
    operational_intensity,
    operator,
    roofline_attainable,
)


def brute_touch(op):
    """Distinct elements touched by a literal loop nest over a GEMM."""
    in1, in2, out = set(), set(), set()
    macs = 0
    shared_w = op.in2_role == "weight"
    for i, m, k, n in itertools.product(range(op.instances), range(op.m), range(op.k), range(op.n)):
        in1.add((i, m, k))
        in2.add((0 if shared_w else i, k, n))
        out.add((i, m, n))
        macs += 1
    return len(in1), len(in2), len(out), macs


def test_workload_validation():
    with pytest.raises(ConfigError):
        AttentionWorkload(1, 8, 10, 3)
    with pytest.raises(ConfigError):
        AttentionWorkload(1, 8, 8, 2, blocks=0)
    with pytest.raises(ConfigError):
        AttentionWorkload(1, 8, 8, 2, bits=12)
    w = AttentionWorkload(2, 128, 64, 4)
    assert w.head_dim == 16 and w.bytes_per_word == 2 and w.pairs == 8


def test_operator_order_and_shapes():
    w = AttentionWorkload(2, 128, 64, 4, ff_mult=4)
    ops = derive_operators(w)
    assert [o.kind for o in ops] == [
        OpKind.Q, OpKind.K, OpKind.V, OpKind.L, OpKind.SOFTMAX, OpKind.A, OpKind.O, OpKind.FC1, OpKind.FC2
    ]
    fc1, fc2 = operator(w, OpKind.FC1), operator(w, OpKind.FC2)
    assert (fc1.m, fc1.k, fc1.n) == (256, 64, 256)
    assert (fc2.m, fc2.k, fc2.n) == (256, 256, 64)
    sm = operator(w, OpKind.SOFTMAX)
    assert (sm.m, sm.n, sm.macs) == (2 * 4 * 128, 128, 0)
    assert operator(w, OpKind.L).in2_role == "activation"
    assert operator(w, OpKind.Q).in2_role == "weight"


def test_mac_examples():
    unit = AttentionWorkload(1, 1, 1, 1, ff_mult=1)
    assert operator(unit, OpKind.L).macs == 1 and operator(unit, OpKind.Q).macs == 1
    assert operator(AttentionWorkload(2, 128, 64, 4), OpKind.L).macs == 2_097_152
    assert operator(AttentionWorkload(64, 512, 768, 12), OpKind.Q).macs == 19_327_352_832


@pytest.mark.parametrize("dims", [(1, 3, 4, 2), (2, 4, 8, 2), (2, 5, 6, 3)])
def test_access_counts_match_loop_nest(dims):
    B, N, D, H = dims
    w = AttentionWorkload(B, N, D, H, ff_mult=2)
    for op in derive_operators(w):
        if op.kind is OpKind.SOFTMAX:
            continue
        c = access_counts(op)
        assert (c.in1_words, c.in2_words, c.out_words, c.macs) == brute_touch(op), op.kind


def test_access_count_examples():
    w = AttentionWorkload(2, 128, 64, 4)
    L, A = operator(w, OpKind.L), operator(w, OpKind.A)
    assert (access_counts(L).in1_words, access_counts(L).in2_words, access_counts(L).out_words) == (16384, 16384, 131072)
    assert (access_counts(A).in1_words, access_counts(A).in2_words, access_counts(A).out_words) == (131072, 16384, 16384)
    unit = AttentionWorkload(1, 1, 1, 1)
    c = access_counts(operator(unit, OpKind.L))
    assert (c.in1_words, c.in2_words, c.out_words) == (1, 1, 1)
    # single-head counting collapses the per-head logit copies
    assert access_counts(L, multi_head=False).out_words == 2 * 128 * 128
    assert access_counts(A, multi_head=False).in1_words == 2 * 128 * 128


def test_oi_examples():
    assert operational_intensity(operator(AttentionWorkload(1, 1, 1, 1), OpKind.L)) == Fraction(1, 3)
    assert operational_intensity(operator(AttentionWorkload(2, 128, 64, 4), OpKind.L)) == Fraction(64, 5)
    assert operational_intensity(operator(AttentionWorkload(1, 8, 4, 1), OpKind.Q)) == Fraction(8, 5)
    with pytest.raises(DegenerateOperator):
        operational_intensity(OperatorSpec(OpKind.L, 0, 0, 0))


dims = st.tuples(
    st.integers(1, 64), st.integers(1, 4096), st.integers(1, 16), st.integers(1, 64)
).map(lambda t: (t[0], t[1], t[2] * t[3], t[2]))


@given(dims, st.integers(1, 64))
def test_la_oi_batch_invariant_and_reciprocal(d, b2):
    B, N, D, H = d
    for kind in (OpKind.L, OpKind.A):
        o1 = operational_intensity(operator(AttentionWorkload(B, N, D, H), kind))
        o2 = operational_intensity(operator(AttentionWorkload(b2, N, D, H), kind))
        assert o1 == o2
        assert abs(float(1 / o1) - (2 / N + H / D)) <= 1e-12 * max(1.0, 2 / N + H / D)


@given(dims)
def test_projection_oi_increases_with_batch(d):
    B, N, D, H = d
    for kind in (OpKind.Q, OpKind.K, OpKind.V, OpKind.O):
        assert operational_intensity(operator(AttentionWorkload(B + 1, N, D, H), kind)) > operational_intensity(
            operator(AttentionWorkload(B, N, D, H), kind)
        )


@given(st.integers(1, 16), st.integers(2, 512), st.integers(1, 8))
def test_la_oi_decreases_with_heads(B, N, dk):
    H1, H2 = 2, 4
    o1 = operational_intensity(operator(AttentionWorkload(B, N, H1 * dk * 2, H1), OpKind.L))
    o2 = operational_intensity(operator(AttentionWorkload(B, N, H1 * dk * 2, H2), OpKind.L))
    assert o2 < o1


@given(dims, st.integers(1, 8))
def test_block_mac_identity(d, ff):
    B, N, D, H = d
    w = AttentionWorkload(B, N, D, H, ff_mult=ff)
    assert block_macs(w) == 4 * B * N * D * D + 2 * B * N * N * D + 2 * ff * B * N * D * D


def test_roofline_examples():
    hw = HardwareConfig(256, 256, 32 << 20, 400e9, onchip_bw=4000e9)
    assert roofline_attainable(float("inf"), hw) == hw.peak_macs_per_sec
    assert roofline_attainable(12.8, hw) == pytest.approx(2.56e12)
    assert roofline_attainable(12.8, hw, staged_on_chip=True, fits=True) == pytest.approx(2.56e13)
    assert roofline_attainable(12.8, hw, staged_on_chip=True, fits=False) == pytest.approx(2.56e12)
    assert roofline_attainable(1e9, hw, staged_on_chip=True) == hw.peak_macs_per_sec
    with pytest.raises(ValueError):
        roofline_attainable(0, hw)
