import json
import math

import jsonschema
import numpy as np
import pytest

import penpulse
from penpulse import beats, dsp, synth, validate
from penpulse.errors import AlignmentError, ConfigError, StatisticError, UsageError


def brute_pearson(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def brute_cosine(x, y):
    dot = sum(a * b for a, b in zip(x, y))
    return dot / math.sqrt(sum(a * a for a in x) * sum(b * b for b in y))


def brute_mse(x, y):
    return sum((a - b) ** 2 for a, b in zip(x, y)) / len(x)


class TestAlign:
    def test_all_within_tolerance(self):
        m = validate.align([1.0, 2.0, 3.0], [1.1, 2.05, 3.0])
        assert m.pairs == [(1.0, 1.1), (2.0, 2.05), (3.0, 3.0)]
        assert m.unmatched_ref == 0 and m.unmatched_cand == 0 and m.match_rate == 1.0

    def test_gap_exceeds_tolerance(self):
        with pytest.raises(AlignmentError):
            validate.align([1.0], [2.0])

    def test_unmatched_counts(self):
        m = validate.align([1.0, 2.0, 3.0, 4.0], [1.02, 3.01, 3.4, 9.0])
        assert m.pairs == [(1.0, 1.02), (3.0, 3.01)]
        assert (m.unmatched_ref, m.unmatched_cand, m.match_rate) == (2, 2, 0.5)

    def test_one_to_one_with_crowded_candidates(self):
        m = validate.align([1.0, 1.1], [1.05])
        assert len(m) == 1

    def test_median_shift(self):
        ref = np.arange(1.0, 11.0)
        cand = ref - 0.3 + np.linspace(-0.01, 0.01, 10)
        with pytest.raises(AlignmentError):
            validate.align(ref, cand, validate.AlignmentSpec(tolerance_s=0.1))
        m = validate.align(ref, cand, validate.AlignmentSpec(0.1, "median_shift"))
        assert len(m) == 10 and m.offset_s == pytest.approx(0.3, abs=0.02)

    def test_paired_intervals_skip_gaps(self):
        m = validate.align([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 4.0])
        dr, dc = m.paired_intervals()
        np.testing.assert_array_equal(dr, [1.0])
        np.testing.assert_array_equal(dc, [1.0])

    def test_empty(self):
        with pytest.raises(UsageError):
            validate.align([], [1.0])

    @pytest.mark.parametrize("kw", [dict(tolerance_s=0), dict(tolerance_s=1.5), dict(global_offset_mode="mean")])
    def test_spec_rejects(self, kw):
        with pytest.raises(ConfigError):
            validate.AlignmentSpec(**kw)

    def test_dropout_match_rate(self):
        rates = []
        for seed in range(5):
            st = synth.generate(synth.SynthSpec(dropout_fraction=0.05, seed=seed))
            found = beats.detect_beats(dsp.lowpass(dsp.magnitude(st.trace), dsp.FilterSpec()))
            rates.append(validate.align(st.truth_beats, found).match_rate)
        assert all(abs(r - 0.95) <= 0.02 for r in rates)


class TestStatistics:
    def test_pearson_examples(self):
        x = [1.0, 2.0, 4.0, 7.0]
        assert validate.pearson(x, x) == pytest.approx(1.0, abs=1e-12)
        assert validate.pearson(x, [-v for v in x]) == pytest.approx(-1.0, abs=1e-12)

    def test_pearson_constant(self):
        with pytest.raises(StatisticError):
            validate.pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_pearson_too_short(self):
        with pytest.raises(UsageError):
            validate.pearson([1.0, 2.0], [1.0, 2.0])

    def test_cosine_examples(self):
        assert validate.cosine_similarity([1.0, 2.0], [1.0, 2.0]) == pytest.approx(1.0)
        assert validate.cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0
        with pytest.raises(StatisticError):
            validate.cosine_similarity([0.0, 0.0], [1.0, 1.0])

    def test_mse_examples(self):
        assert validate.mse([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert validate.mse([1, 2], [2, 4]) == 2.5
        with pytest.raises(UsageError):
            validate.mse([1.0], [1.0, 2.0])

    @pytest.mark.parametrize("seed", range(50))
    def test_brute_force_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 101))
        x = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 3), n)
        y = 0.5 * x + rng.normal(0, 1, n)
        xl, yl = x.tolist(), y.tolist()
        assert validate.pearson(x, y) == pytest.approx(brute_pearson(xl, yl), abs=1e-12)
        assert validate.cosine_similarity(x, y) == pytest.approx(brute_cosine(xl, yl), abs=1e-12)
        assert validate.mse(x, y) == pytest.approx(brute_mse(xl, yl), rel=1e-12, abs=1e-12)

    def test_five_number(self):
        f = validate.FiveNumber.of([1.0, 2.0, 3.0, 4.0])
        assert (f.min, f.q1, f.median, f.q3, f.max) == (1.0, 1.75, 2.5, 3.25, 4.0)


class TestReport:
    def test_self_comparison(self):
        ref = [0.4, 1.3, 2.1, 3.0, 3.85, 4.7]
        r = validate.build_report(ref, ref)
        assert (r.pearson_r, r.cosine_similarity, r.welch_p, r.student_p) == (1.0, 1.0, 1.0, 1.0)
        assert r.mse_dt == 0.0 and r.match_rate == 1.0
        assert r.ref_summary == r.cand_summary

    def test_schema_and_round_trip(self, synth_72):
        found = beats.detect_beats(dsp.lowpass(dsp.magnitude(synth_72.trace), dsp.FilterSpec()))
        report = validate.build_report(synth_72.truth_beats, found)
        doc = json.loads(report.to_json())
        jsonschema.validate(doc, penpulse.load_schema("report"))
        assert validate.ValidationReport.from_dict(doc) == report
        assert report.pearson_r >= 0.99 and report.cosine_similarity >= 0.99
        assert abs(report.ref_summary.mean_hr_bpm - report.cand_summary.mean_hr_bpm) <= 0.76
        assert report.welch_p > 0.05

    def test_errors_are_labeled(self):
        # two matches only: pearson needs three
        with pytest.raises(UsageError, match="^pearson: "):
            validate.build_report([1.0, 2.0], [1.0, 2.0])

    def test_alignment_failure_labeled(self):
        with pytest.raises(AlignmentError, match="^align: "):
            validate.build_report([1.0, 2.0, 3.0], [10.0, 11.0, 12.0])


def test_pairs_csv():
    m = validate.align([1.0, 2.0], [1.1, 2.0])
    assert validate.pairs_csv(m) == "t_ref_s,t_cand_s\n1.0,1.1\n2.0,2.0\n"


def test_boxplot_csv():
    assert validate.boxplot_csv([1.0], [0.5, 0.75]) == "source,dt_s\necg,1.0\npen,0.5\npen,0.75\n"
