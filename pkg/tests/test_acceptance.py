"""The ten acceptance criteria at their stated sizes and tolerances.

Run alone with ``pytest tests/test_acceptance.py``; the summary section at
the end of the session lists one PASS/FAIL line per criterion.
"""

import hashlib

import pytest

import acceptance_harness as H

pytestmark = pytest.mark.acceptance

_results = {}


def _record(result, lines):
    _results[result.number] = result
    lines.append(result.line())
    print(result.line())
    assert result.passed, result.summary


def test_criterion_01_single_relation_soundness(corpora, acceptance_lines):
    _record(H.criterion_1(corpora[0]), acceptance_lines)


def test_criterion_02_operation_clauses(corpora, acceptance_lines):
    _record(H.criterion_2(corpora[1]), acceptance_lines)


def test_criterion_03_pair_soundness(corpora, acceptance_lines):
    _record(H.criterion_3(corpora[2]), acceptance_lines)


def test_criterion_04_transitive_closure_identity(corpora, acceptance_lines):
    _record(H.criterion_4(corpora[0]), acceptance_lines)


def test_criterion_05_strict_commuting(acceptance_lines):
    _record(H.criterion_5(), acceptance_lines)


def test_criterion_06_counterexample_catalog(acceptance_lines):
    _record(H.criterion_6(), acceptance_lines)


def test_criterion_07_oracle_agreement(corpora, acceptance_lines):
    single, with_ops, pairs = corpora
    _record(H.criterion_7(single + with_ops + [t for g in pairs.values() for t in g]), acceptance_lines)


def test_criterion_08_fraisse_stage(acceptance_lines):
    _record(H.criterion_8(), acceptance_lines)


def test_criterion_09_acyclic_digraph_demonstration(acceptance_lines):
    _record(H.criterion_9(), acceptance_lines)


def test_criterion_10_determinism(corpora, acceptance_lines):
    """Rerun criteria 1-9 from freshly generated inputs and compare reports byte for byte."""
    first = {n: r.report for n, r in _results.items()}
    if len(first) < 9:
        first = {r.number: r.report for r in H.run_all(corpora)}
    second = {r.number: r.report for r in H.run_all(H.generate_corpora())}
    differing = [n for n in sorted(first) if first[n] != second[n]]
    digest = hashlib.sha256("".join(first[n] for n in sorted(first)).encode()).hexdigest()[:16]
    result = H.Result(10, not differing,
                      f"reports of criteria 1-9 identical across two runs (digest {digest}); "
                      f"differing: {differing or 'none'}", "")
    _record(result, acceptance_lines)
