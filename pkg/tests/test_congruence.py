import json
from fractions import Fraction
from math import gcd

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mockcong.cachefile import read_cache, write_cache
from mockcong.catalog import expand_psi, get_spec, partition_series
from mockcong.congruence import (
    CongruenceCertificate,
    NoAdmissibleA,
    Status,
    assemble_congruence,
    candidate_primes,
    hunt_annihilating_prime,
    m_progression,
    recheck_counterexample,
    scan_progressions,
    verify_progression,
)
from mockcong.qseries import ModulusMismatch, WindowError, monomial, series, zero
from mockcong.twist import jacobi_symbol


@pytest.fixture(scope="module")
def partitions():
    return partition_series(20000, 5 * 7 * 11)


# --- verify ----------------------------------------------------------------------------


def test_ramanujan_mod5(partitions):
    cert = verify_progression(partitions, 5, 4, 5, 1000)
    assert cert.status is Status.VERIFIED_TO_HORIZON
    assert cert.counterexample_n is None


def test_counterexample_at_zero(partitions):
    cert = verify_progression(partitions, 5, 1, 5, 0)
    assert cert.status is Status.COUNTEREXAMPLE
    assert cert.counterexample_n == 0
    assert recheck_counterexample(partitions, cert)


def test_first_failure_recorded(partitions):
    cert = verify_progression(partitions, 7, 5, 5, 100)
    n = cert.counterexample_n
    assert all(partitions[7 * k + 5] % 5 == 0 for k in range(n))
    assert partitions[7 * n + 5] % 5 != 0


def test_bpor_psi():
    s = expand_psi(73205 * 20 + 722, 5)
    assert verify_progression(s, 73205, 721, 5, 20).status is Status.VERIFIED_TO_HORIZON


def test_verify_window_error(partitions):
    with pytest.raises(WindowError, match="largest feasible horizon"):
        verify_progression(partitions, 5, 4, 5, 10**4)


def test_verify_preconditions(partitions):
    with pytest.raises(ValueError):
        verify_progression(partitions, 0, 4, 5, 3)
    with pytest.raises(ValueError):
        verify_progression(series([1, 2], val=2), 1, 1, 5, 0)
    with pytest.raises(ModulusMismatch):
        verify_progression(partitions, 5, 4, 13, 3)


def test_verify_exact_series():
    s = partition_series(200)
    assert verify_progression(s, 11, 6, 11, 15).verified


def test_verify_reads_memmap(tmp_path, partitions):
    path = write_cache(partitions, tmp_path / "p.qs1")
    cached = read_cache(path)
    assert isinstance(cached.coeffs, np.memmap)
    a = verify_progression(cached, 7, 5, 7, 2000)
    b = verify_progression(partitions, 7, 5, 7, 2000)
    assert a == b


def test_certificate_json_round_trip(partitions):
    cert = verify_progression(partitions, 5, 1, 5, 3, series_id="partition", provenance=[{"step": "x"}],
                              checksum="sha256:00")
    text = cert.to_json()
    assert json.loads(text)["status"] == "COUNTEREXAMPLE"
    assert CongruenceCertificate.from_json(text) == cert
    assert cert.to_json() == CongruenceCertificate.from_json(text).to_json()


def test_certificate_invariant():
    with pytest.raises(ValueError):
        CongruenceCertificate("x", 5, 4, 5, 10, Status.COUNTEREXAMPLE)
    with pytest.raises(ValueError):
        CongruenceCertificate("x", 5, 4, 5, 10, Status.VERIFIED_TO_HORIZON, counterexample_n=3)


def test_verify_deterministic(partitions):
    assert verify_progression(partitions, 11, 6, 11, 1500) == verify_progression(partitions, 11, 6, 11, 1500)


# --- scan ------------------------------------------------------------------------------


def test_scan_mod5_only_ramanujan(partitions):
    hits = scan_progressions(partitions, 5, [5], 1000)
    assert [(c.A, c.B) for c in hits] == [(5, 4)]


def test_scan_mod7_includes_ramanujan(partitions):
    hits = scan_progressions(partitions, 7, [7], 1000)
    assert (7, 5) in [(c.A, c.B) for c in hits]


def test_scan_zero_series():
    hits = scan_progressions(zero(100, modulus=5), 5, [3, 2], 10)
    assert [(c.A, c.B) for c in hits] == [(2, 0), (2, 1), (3, 0), (3, 1), (3, 2)]


def test_scan_threads_same_result(partitions):
    one = scan_progressions(partitions, 11, [11, 22], 400, threads=1)
    many = scan_progressions(partitions, 11, [11, 22], 400, threads=4)
    assert one == many
    assert (11, 6) in [(c.A, c.B) for c in one] and (22, 6) in [(c.A, c.B) for c in one]


def test_scan_window_error(partitions):
    with pytest.raises(WindowError):
        scan_progressions(partitions, 5, [5, 100], 200)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 100), st.integers(1, 100))
def test_scan_shrinking_horizon_keeps_hits(h1, h2):
    s = partition_series(3000, 7)
    lo, hi = sorted((h1, h2))
    small = {(c.A, c.B) for c in scan_progressions(s, 7, [7, 14], lo)}
    big = {(c.A, c.B) for c in scan_progressions(s, 7, [7, 14], hi)}
    assert big <= small


# --- assemble ----------------------------------------------------------------------------


def test_assemble_bpor_case():
    asm = assemble_congruence(11, 5, 0, 5, get_spec("psi"), allow_q_equals_ell=True)
    assert (asm.A, asm.A_mod, asm.B, asm.B_prime) == (13, 11**4 * 5, 17303, Fraction(721))
    assert asm.form == "q_equals_ell"
    assert m_progression(asm.A_mod, asm.B, 24, -1) == (73205, 721)


def test_assemble_q_equals_ell_needs_override():
    with pytest.raises(ValueError):
        assemble_congruence(11, 5, 0, 5, get_spec("psi"))
    with pytest.raises(ValueError):
        assemble_congruence(11, 5, 1, 5, get_spec("psi"), allow_q_equals_ell=True)


def test_assemble_p23_example():
    asm = assemble_congruence(23, 5, 0, 3, (1, 0))
    brute = next(A for A in range(1, 1000) if gcd(A, 115) == 1 and jacobi_symbol(-(23**3) * A, 3) == -1)
    assert asm.A == brute
    assert asm.A_mod == 23**4 * 5 * 3
    assert asm.statement_modulus == 23**4 * 3
    assert asm.B == 23**3 * asm.A
    assert asm.B_prime == asm.B


def test_assemble_congruence_class_condition():
    asm = assemble_congruence(7, 5, 1, 11, (24, -1))
    assert gcd(24, 7 * 11 * 5) == 1
    assert asm.B % 24 == 23
    assert asm.B_prime.denominator == 1
    assert m_progression(asm.A_mod, asm.B, 24, -1) == (asm.A_mod, int(asm.B_prime))


def test_assemble_cap():
    with pytest.raises(NoAdmissibleA):
        assemble_congruence(7, 5, 1, 11, (24, -1), cap=3)


def test_assemble_rejects_bad_inputs():
    with pytest.raises(ValueError):
        assemble_congruence(5, 5, 0, 3, (1, 0))
    with pytest.raises(ValueError):
        assemble_congruence(7, 5, 0, 7, (1, 0))
    with pytest.raises(ValueError):
        assemble_congruence(9, 5, 0, 3, (1, 0))


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([7, 11, 13, 17, 19, 23, 29, 31]), st.sampled_from([3, 5, 7, 11, 13]),
       st.integers(0, 3), st.sampled_from([3, 5, 7, 11, 13, 17]), st.sampled_from([(1, 0), (24, -1), (3, 2), (8, 1)]))
def test_assemble_properties(p, ell, m, Q, dt):
    if len({p, ell, Q}) < 3:
        return
    delta, tau = dt
    asm = assemble_congruence(p, ell, m, Q, dt)
    assert asm.A <= 2 * Q * delta or asm.A <= asm.cap
    assert gcd(asm.A, p * ell) == 1
    assert asm.B == p**3 * ell**m * asm.A
    assert jacobi_symbol(-asm.B, Q) == -1
    assert asm.A_mod % Q == 0
    for n in range(5):
        assert jacobi_symbol(-(asm.A_mod * n + asm.B), Q) == -1
    if gcd(delta, p * Q * ell) == 1:
        assert (asm.B - tau) % delta == 0
    assert asm.B_prime == Fraction(asm.B - tau, delta)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 500), st.integers(0, 500), st.integers(1, 30), st.integers(-30, 30))
def test_m_progression_maps_terms(A, B, delta, tau):
    target = m_progression(A, B, delta, tau)
    hits = [A * n + B for n in range(3 * delta) if (A * n + B - tau) % delta == 0]
    if target is None:
        assert not hits
        return
    A2, B2 = target
    got = [(e - tau) // delta for e in hits]
    assert got[: 3] == [A2 * k + B2 for k in range(len(got[:3]))]


# --- hunt -----------------------------------------------------------------------------


def test_candidate_primes():
    assert candidate_primes(4, 5, 100, restrict_class=False) == [3, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43,
                                                                 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97]
    assert candidate_primes(4, 5, 200) == [19, 59, 79, 139, 179, 199]
    assert candidate_primes(12, 5, 200) == [59, 179]


def test_hunt_zero_series():
    res = hunt_annihilating_prime(zero(10**4, modulus=5), 5, 0, 12, 1, 4, 100, bound=10, restrict_class=False)
    assert res.p == 3
    assert res.certificate.status is Status.VERIFIED_TO_HORIZON
    assert res.certificate.A == 1 and res.certificate.B == 0 and res.certificate.modulus == 5


def test_hunt_constructed_failure():
    # q survives every T(p^2) through the middle term (n/p) at n = 1
    s = monomial(1, 10**4, modulus=5)
    res = hunt_annihilating_prime(s, 5, 0, 12, 1, 4, 50, bound=3, restrict_class=False)
    assert not res
    assert res.p is None
    assert res.attempts and all(w == 1 for _, w in res.attempts)


def test_hunt_window_error():
    with pytest.raises(WindowError, match="need trunc >= 901"):
        hunt_annihilating_prime(zero(100, modulus=5), 5, 0, 12, 1, 4, 50, bound=100, restrict_class=False)


def test_hunt_sturm_status():
    res = hunt_annihilating_prime(zero(10**4, modulus=5), 5, 0, 12, 1, 4, 10, bound=100, restrict_class=False,
                                  sturm=50)
    assert res.certificate.status is Status.STURM_CERTIFIED
