import numpy as np
import pytest

from builders import make_bundle, make_pair, random_instance
from duokit import (DuoWeights, ScoredPredictions, SimSpec, SingleScaled,
                    UQOnlyDuo, WeightedDuo, accuracy, auroc_correctness, brier,
                    combine_logits, ece, evaluate, flops_balance, generate,
                    macro_f1, nll, risk_coverage, sac, score, score_duo)
from duokit.metrics import SCHEMA_VERSION, sac_key
from oracles import pairwise_auroc, prefix_risk_curve, prefix_sac


def scored_from(uncertainty, correct):
    unc = np.asarray(uncertainty, dtype=np.float64)
    cor = np.asarray(correct, dtype=bool)
    return ScoredPredictions(pred=np.zeros(unc.shape[0], dtype=np.int64),
                             confidence=1.0 - unc, uncertainty=unc,
                             correct=cor)


class TestMacroF1:
    def test_two_class_example(self):
        # class 0: tp 1 of predicted 1, support 2; class 1: tp 1 of 2, support 1
        assert macro_f1([0, 1, 1], [0, 1, 0], 2) == pytest.approx(2 / 3)

    def test_zero_support_class_excluded(self):
        # class 2 predicted once but never appears in the labels
        assert macro_f1([0, 1, 2, 1], [0, 1, 1, 1], 3) == pytest.approx(0.9)

    def test_never_predicted_class_scores_zero(self):
        assert macro_f1([0, 0], [0, 1], 2) == pytest.approx(1 / 3)

    def test_perfect(self):
        assert macro_f1([0, 1, 2], [0, 1, 2], 3) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="no class has support"):
            macro_f1(np.array([], dtype=int), np.array([], dtype=int), 2)


class TestBrier:
    def test_uniform_three_way(self):
        assert brier(np.zeros((1, 3)), np.array([2])) == pytest.approx(2 / 3)

    def test_confident_correct_near_zero(self):
        assert brier(np.array([[60.0, 0.0]]), np.array([0])) == pytest.approx(
            0.0, abs=1e-12)

    def test_confident_wrong_near_two(self):
        assert brier(np.array([[60.0, 0.0]]), np.array([1])) == pytest.approx(
            2.0, abs=1e-12)

    def test_range_on_random(self, rng):
        z, labels = random_instance(rng, n=200, k=6)
        v = brier(z, labels)
        assert 0.0 <= v <= 2.0


class TestEce:
    def test_constant_confidence_gap(self):
        sp = scored_from([0.2] * 10, [True] * 6 + [False] * 4)
        report = ece(sp)
        assert report.ece == pytest.approx(0.2)
        occupied = [b for b in report.bins if b[2] > 0]
        assert len(occupied) == 1
        assert occupied[0][2] == 10
        assert occupied[0][3] == pytest.approx(0.8)
        assert occupied[0][4] == pytest.approx(0.6)

    def test_single_bin_reduces_to_mean_gap(self, rng):
        unc = rng.uniform(0, 1, 50)
        correct = rng.uniform(0, 1, 50) < 0.7
        sp = scored_from(unc, correct)
        expected = abs((1 - unc).mean() - correct.mean())
        assert ece(sp, num_bins=1).ece == pytest.approx(expected, rel=1e-12)

    def test_bins_right_closed(self):
        # with two bins the shared edge 0.5 belongs to the lower bin
        report = ece(scored_from([0.5], [True]), num_bins=2)
        assert report.bins[0][2] == 1
        assert report.bins[1][2] == 0

    def test_confidence_zero_joins_first_bin(self):
        report = ece(scored_from([1.0], [False]), num_bins=2)
        assert report.bins[0][2] == 1

    def test_confidence_one_joins_last_bin(self):
        report = ece(scored_from([0.0], [True]), num_bins=15)
        assert report.bins[-1][2] == 1

    def test_empty_bins_are_nan(self):
        report = ece(scored_from([0.05, 0.02], [True, True]))
        counts = [b[2] for b in report.bins]
        assert sum(counts) == 2
        for lo, hi, count, mean_conf, emp_acc in report.bins:
            if count == 0:
                assert np.isnan(mean_conf) and np.isnan(emp_acc)
            else:
                assert np.isfinite(mean_conf) and np.isfinite(emp_acc)

    def test_default_bin_count(self):
        assert len(ece(scored_from([0.5], [True])).bins) == 15

    def test_zero_for_perfectly_calibrated_bins(self):
        unc = np.array([0.25] * 4 + [0.75] * 4)
        correct = np.array([True, True, True, False, True, False, False, False])
        assert ece(scored_from(unc, correct)).ece == pytest.approx(0.0, abs=1e-12)

    def test_bad_bin_count_rejected(self):
        with pytest.raises(ValueError, match="num_bins"):
            ece(scored_from([0.5], [True]), num_bins=0)

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            ece(scored_from([], []))


class TestAuroc:
    def test_small_example(self):
        sp = scored_from([0.1, 0.2, 0.3, 0.4], [True, False, True, False])
        assert auroc_correctness(sp) == pytest.approx(0.75)

    def test_perfect_separation(self):
        sp = scored_from([0.1, 0.2, 0.8, 0.9], [True, True, False, False])
        assert auroc_correctness(sp) == 1.0

    def test_all_tied_is_half(self):
        sp = scored_from([0.5] * 6, [True, False, True, False, True, False])
        assert auroc_correctness(sp) == pytest.approx(0.5)

    @pytest.mark.parametrize("correct", [[True, True], [False, False]])
    def test_degenerate_rejected(self, correct):
        with pytest.raises(ValueError, match="AUROC undefined"):
            auroc_correctness(scored_from([0.1, 0.2], correct))

    def test_matches_pairwise_oracle(self, rng):
        for _ in range(10):
            unc = np.round(rng.uniform(0, 1, 80), 2)  # duplicates force ties
            correct = rng.uniform(0, 1, 80) < 0.6
            if correct.all() or not correct.any():
                continue
            sp = scored_from(unc, correct)
            assert auroc_correctness(sp) == pytest.approx(
                pairwise_auroc(unc, correct), rel=1e-12)

    def test_monotone_transform_invariance(self, rng):
        unc = np.round(rng.uniform(0, 1, 60), 2)
        correct = rng.uniform(0, 1, 60) < 0.5
        correct[0], correct[1] = True, False
        base = auroc_correctness(scored_from(unc, correct))
        assert auroc_correctness(scored_from(4.0 * unc, correct)) == base
        assert auroc_correctness(scored_from(unc ** 3, correct)) == base


class TestRiskCoverage:
    def test_small_example(self):
        curve = risk_coverage(scored_from([0.1, 0.2, 0.3], [True, True, False]))
        np.testing.assert_allclose(curve.coverage, [1 / 3, 2 / 3, 1.0])
        np.testing.assert_allclose(curve.risk, [0.0, 0.0, 1 / 3])
        assert curve.aurc == pytest.approx(1 / 9)

    def test_sac_example(self):
        sp = scored_from([0.1, 0.2, 0.3, 0.4, 0.5],
                         [True, True, True, True, False])
        curve = risk_coverage(sp, sac_targets=(0.98, 0.8, 0.0))
        assert curve.sac[0.98] == pytest.approx(0.8)
        assert curve.sac[0.8] == pytest.approx(1.0)
        assert curve.sac[0.0] == 1.0

    def test_sac_unreachable_target_is_zero(self):
        curve = risk_coverage(scored_from([0.1, 0.2], [False, False]),
                              sac_targets=(0.5,))
        assert curve.sac[0.5] == 0.0

    def test_sac_helper_matches_curve_field(self, rng):
        unc = rng.uniform(0, 1, 40)
        correct = rng.uniform(0, 1, 40) < 0.7
        curve = risk_coverage(scored_from(unc, correct), sac_targets=(0.9,))
        assert sac(curve, 0.9) == curve.sac[0.9]

    def test_sac_monotone_in_target(self, rng):
        unc = rng.uniform(0, 1, 60)
        correct = rng.uniform(0, 1, 60) < 0.65
        curve = risk_coverage(scored_from(unc, correct))
        targets = np.linspace(0, 1, 21)
        values = [sac(curve, t) for t in targets]
        assert all(b <= a for a, b in zip(values, values[1:]))

    def test_ties_keep_input_order(self):
        curve = risk_coverage(scored_from([0.5, 0.5], [False, True]))
        np.testing.assert_allclose(curve.risk, [1.0, 0.5])

    def test_matches_prefix_oracle(self, rng):
        unc = np.round(rng.uniform(0, 1, 70), 2)
        correct = rng.uniform(0, 1, 70) < 0.6
        curve = risk_coverage(scored_from(unc, correct))
        o_cov, o_risk, o_aurc = prefix_risk_curve(unc, correct)
        np.testing.assert_allclose(curve.coverage, o_cov, rtol=1e-12)
        np.testing.assert_allclose(curve.risk, o_risk, rtol=1e-12)
        assert curve.aurc == pytest.approx(o_aurc, rel=1e-12)
        assert sac(curve, 0.7) == pytest.approx(
            prefix_sac(unc, correct, 0.7), rel=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            risk_coverage(scored_from([], []))


class TestSacKey:
    def test_formatting(self):
        assert sac_key(0.98) == "sac_98"
        assert sac_key(0.5) == "sac_50"
        assert sac_key(0.995) == "sac_99.5"
        assert sac_key(1.0) == "sac_100"


@pytest.fixture(scope="module")
def sim_pair():
    spec = SimSpec(num_classes=5, n_val=200, n_test=400, acc_large=0.8,
                   acc_small=0.6, seed=7)
    _, test_pair = generate(spec)
    return test_pair


class TestEvaluate:
    def test_duo_row_fields(self, sim_pair):
        weights = DuoWeights(0.9, 0.4)
        row = evaluate(sim_pair, WeightedDuo(weights))
        assert row.mode == "weighted"
        assert row.measure == "softmax_response"
        assert row.split == "test"
        assert row.large_model == sim_pair.large.meta.model_name
        assert row.small_model == sim_pair.small.meta.model_name
        assert row.balance == pytest.approx(flops_balance(sim_pair))
        scored = score_duo(sim_pair, WeightedDuo(weights))
        assert row.accuracy == accuracy(scored)
        z = combine_logits(sim_pair, weights)
        assert row.nll == pytest.approx(nll(z, sim_pair.large.labels))
        assert row.brier == pytest.approx(brier(z, sim_pair.large.labels))

    def test_single_mode_balance_zero(self, sim_pair):
        row = evaluate(sim_pair, SingleScaled(1.0))
        assert row.balance == 0.0
        assert row.small_model == ""
        assert row.mode == "single"

    def test_bare_bundle_matches_pair_single(self, sim_pair):
        from_pair = evaluate(sim_pair, SingleScaled(0.7))
        from_bundle = evaluate(sim_pair.large, SingleScaled(0.7))
        assert from_pair.to_record() == from_bundle.to_record()

    def test_uq_only_probabilistic_metrics_use_combined(self, sim_pair):
        weights = DuoWeights(0.8, 0.5)
        row = evaluate(sim_pair, UQOnlyDuo(weights))
        z = combine_logits(sim_pair, weights)
        assert row.nll == pytest.approx(nll(z, sim_pair.large.labels))
        assert row.brier == pytest.approx(brier(z, sim_pair.large.labels))
        # prediction quality still comes from the large member alone
        single = evaluate(sim_pair, SingleScaled(1.0))
        assert row.accuracy == single.accuracy
        assert row.macro_f1 == single.macro_f1

    def test_val_split_rejected(self):
        spec = SimSpec(num_classes=5, n_val=100, n_test=100, acc_large=0.8,
                       acc_small=0.6, seed=3)
        val_pair, _ = generate(spec)
        with pytest.raises(ValueError, match="test-split"):
            evaluate(val_pair, SingleScaled(1.0))

    def test_bare_bundle_rejects_duo_modes(self, sim_pair):
        with pytest.raises(ValueError, match="only supports single"):
            evaluate(sim_pair.large, WeightedDuo(DuoWeights(1.0, 1.0)))

    def test_record_column_order(self, sim_pair):
        row = evaluate(sim_pair, SingleScaled(1.0), sac_targets=(0.98, 0.9))
        rec = row.to_record()
        assert list(rec) == [
            "dataset", "split", "large_model", "small_model", "balance",
            "mode", "measure", "accuracy", "macro_f1", "nll", "brier", "ece",
            "auroc", "aurc", "sac_90", "sac_98", "schema_version"]
        assert rec["schema_version"] == SCHEMA_VERSION

    def test_entropy_measure_recorded(self, sim_pair):
        row = evaluate(sim_pair, SingleScaled(1.0), measure="entropy")
        assert row.measure == "entropy"

    def test_metrics_on_crafted_bundle(self, rng):
        z, labels = random_instance(rng, n=300, k=4)
        bundle = make_bundle(z, labels, split="test")
        row = evaluate(bundle, SingleScaled(1.0))
        scored = score(bundle.logits.astype(np.float64), labels)
        assert row.accuracy == accuracy(scored)
        assert row.auroc == pytest.approx(auroc_correctness(scored))
        assert row.aurc == pytest.approx(risk_coverage(scored).aurc)
