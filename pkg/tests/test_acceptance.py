"""Acceptance criteria 1-9.

Each test prints one ``criterion N: PASS|FAIL (detail)`` line.  Run directly with
``python3 tests/test_acceptance.py`` or through pytest.
"""

from __future__ import annotations

import pytest

import criteria


def _report(capsys, number: int, result: tuple[bool, str]) -> None:
    ok, detail = result
    with capsys.disabled():
        print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, detail


def test_criterion_1_corpus_goldens(capsys):
    _report(capsys, 1, criteria.golden_corpus())


def test_criterion_2_vec_asymmetry(capsys):
    _report(capsys, 2, criteria.vec_asymmetry())


def test_criterion_3_elaboration_soundness(capsys, corpus_elaborations):
    _report(capsys, 3, criteria.elaboration_soundness(corpus_elaborations))


def test_criterion_4_unification_soundness(capsys):
    _report(capsys, 4, criteria.unification_soundness())


def test_criterion_5_oracle_agreement(capsys):
    _report(capsys, 5, criteria.oracle_agreement())


def test_criterion_6_normalization(capsys):
    _report(capsys, 6, criteria.normalization())


def test_criterion_7_hint_before_delta(capsys):
    _report(capsys, 7, criteria.hint_before_delta())


def test_criterion_8_error_goldens(capsys):
    _report(capsys, 8, criteria.error_goldens())


def test_criterion_9_determinism(capsys):
    _report(capsys, 9, criteria.determinism())


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
