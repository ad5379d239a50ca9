import json

import numpy as np
import pytest

from csisrc.evaluate import (BinaryMetrics, ConfusionMatrix, KNN_METHOD,
                             StratificationError, SweepSpec,
                             aggregate_class_distance, band_sweep,
                             class_distance, evaluate, kfold_split,
                             make_windows, walking_metrics,
                             write_cells_csv, write_report_json)
from csisrc.model import (ActivityClass, BandDescriptor, CLASS_ORDER,
                          CsiVector, DegenerateAtomError, LabeledSample,
                          Sample)
from csisrc.simulate import ScenarioConfig, generate
from csisrc.solver import SolverConfig


def make_band(n=8, bw=125.0):
    return BandDescriptor(center_freq_mhz=5800.0, total_bandwidth_mhz=bw,
                          num_subcarriers=n)


def labeled(values, label, snr=20.0, seq=0):
    return LabeledSample(
        sample=Sample(csi=CsiVector(values=np.asarray(values, complex),
                                    band=make_band(len(values))),
                      snr_db=snr, seq=seq),
        label=label)


def toy_dataset(rng, per_class=4, n=8, classes=CLASS_ORDER):
    data = []
    seq = 0
    for label in classes:
        for _ in range(per_class):
            data.append(labeled(rng.standard_normal(n)
                                + 1j * rng.standard_normal(n),
                                label, snr=rng.uniform(10, 30), seq=seq))
            seq += 1
    return data


class TestConfusionMatrix:
    def test_accuracy(self):
        cm = ConfusionMatrix.empty()
        cm.add(ActivityClass.E, ActivityClass.E)
        cm.add(ActivityClass.E, ActivityClass.L)
        cm.add(ActivityClass.L, ActivityClass.L)
        cm.add(ActivityClass.WB, ActivityClass.WB)
        assert cm.total == 4
        assert cm.accuracy == 0.75

    def test_empty_accuracy_nan(self):
        assert np.isnan(ConfusionMatrix.empty().accuracy)


class TestBinaryMetrics:
    def test_rates(self):
        bm = BinaryMetrics(tp=8, tn=6, fp=2, fn=4)
        assert bm.tpr == pytest.approx(8 / 12)
        assert bm.fpr == pytest.approx(2 / 8)
        assert bm.f1 == pytest.approx(16 / 22)

    def test_undefined_denominators(self):
        assert BinaryMetrics(tp=0, tn=5, fp=0, fn=0).tpr is None
        assert BinaryMetrics(tp=3, tn=0, fp=0, fn=1).fpr is None
        assert BinaryMetrics(tp=0, tn=5, fp=0, fn=0).f1 is None

    def test_walking_collapse(self):
        cm = ConfusionMatrix.empty()
        cm.add(ActivityClass.WB, ActivityClass.WL)   # tp: both walking
        cm.add(ActivityClass.WL, ActivityClass.E)    # fn
        cm.add(ActivityClass.E, ActivityClass.WB)    # fp
        cm.add(ActivityClass.SiB, ActivityClass.StL)  # tn
        bm = walking_metrics(cm)
        assert (bm.tp, bm.fn, bm.fp, bm.tn) == (1, 1, 1, 1)


class TestMakeWindows:
    def test_non_overlapping_drop_remainder(self):
        rng = np.random.default_rng(0)
        data = toy_dataset(rng, per_class=7,
                           classes=[ActivityClass.E, ActivityClass.L])
        windows = make_windows(data, ws=3)
        assert len(windows) == 4  # 7 // 3 per class
        for w in windows:
            assert len(w.samples) == 3
            assert all(ls.label is w.label for ls in w.samples)

    def test_ws_one_keeps_every_sample(self):
        rng = np.random.default_rng(1)
        data = toy_dataset(rng, per_class=5)
        assert len(make_windows(data, ws=1)) == len(data)

    def test_overlapping_stride(self):
        rng = np.random.default_rng(2)
        data = toy_dataset(rng, per_class=5, classes=[ActivityClass.E])
        assert len(make_windows(data, ws=3, stride=1)) == 3

    def test_invalid_ws(self):
        with pytest.raises(ValueError):
            make_windows([], ws=0)


class TestKfoldSplit:
    def test_partitions_cover_and_disjoint(self):
        rng = np.random.default_rng(3)
        windows = make_windows(toy_dataset(rng, per_class=6), ws=1)
        parts = kfold_split(windows, 3, seed=0)
        assert len(parts) == 3
        seen = []
        for train, test in parts:
            assert len(train) + len(test) == len(windows)
            assert not (set(id(w) for w in train)
                        & set(id(w) for w in test))
            seen.extend(id(w) for w in test)
        assert sorted(seen) == sorted(id(w) for w in windows)

    def test_stratified(self):
        rng = np.random.default_rng(4)
        windows = make_windows(toy_dataset(rng, per_class=6), ws=1)
        for _, test in kfold_split(windows, 3, seed=1):
            per_class = {}
            for w in test:
                per_class[w.label] = per_class.get(w.label, 0) + 1
            assert set(per_class.values()) == {2}

    def test_deterministic_under_seed(self):
        rng = np.random.default_rng(5)
        windows = make_windows(toy_dataset(rng, per_class=6), ws=1)
        a = kfold_split(windows, 3, seed=7)
        b = kfold_split(windows, 3, seed=7)
        for (tr1, te1), (tr2, te2) in zip(a, b):
            assert [id(w) for w in te1] == [id(w) for w in te2]

    def test_too_few_windows(self):
        rng = np.random.default_rng(6)
        windows = make_windows(toy_dataset(rng, per_class=2), ws=1)
        with pytest.raises(StratificationError):
            kfold_split(windows, 3, seed=0)


class TestBandSweep:
    def test_twenty_of_125_in_5_steps(self):
        sels = band_sweep(make_band(320), 20.0, 5.0)
        assert len(sels) == 22
        assert sels[0].start_mhz_offset == 0.0
        assert sels[-1].start_mhz_offset == 105.0

    def test_five_of_twenty(self):
        sels = band_sweep(make_band(64, bw=20.0), 5.0, 5.0)
        assert len(sels) == 4

    def test_full_width_single_window(self):
        assert len(band_sweep(make_band(320), 125.0, 5.0)) == 1

    def test_width_exceeds_band(self):
        with pytest.raises(ValueError):
            band_sweep(make_band(320), 130.0, 5.0)

    def test_bad_step(self):
        with pytest.raises(ValueError):
            band_sweep(make_band(320), 20.0, 0.0)


class TestClassDistance:
    def test_orthonormal_singletons(self):
        e1 = np.array([1.0, 0.0], complex)
        e2 = np.array([0.0, 1.0], complex)
        # within-class terms vanish, cross distance is sqrt(2)
        assert class_distance([e1], [e2]) == pytest.approx(2 * np.sqrt(2))

    def test_identical_groups_zero(self):
        v = np.array([1.0 + 1j, 2.0], complex)
        assert class_distance([v], [v]) == pytest.approx(0.0, abs=1e-12)

    def test_symmetric(self):
        rng = np.random.default_rng(7)
        a = [rng.standard_normal(6) + 1j * rng.standard_normal(6)
             for _ in range(4)]
        b = [rng.standard_normal(6) + 1j * rng.standard_normal(6)
             for _ in range(3)]
        assert class_distance(a, b) == pytest.approx(class_distance(b, a))

    def test_scale_invariant(self):
        rng = np.random.default_rng(8)
        a = [rng.standard_normal(6) + 1j * rng.standard_normal(6)
             for _ in range(3)]
        b = [rng.standard_normal(6) + 1j * rng.standard_normal(6)
             for _ in range(3)]
        scaled = [5.0 * v for v in a]
        assert class_distance(scaled, b) == pytest.approx(
            class_distance(a, b))

    def test_zero_vector_rejected(self):
        with pytest.raises(DegenerateAtomError):
            class_distance([np.zeros(3, complex)], [np.ones(3, complex)])

    def test_aggregate_mean_over_pairs(self):
        e = np.eye(3, dtype=complex)
        groups = {ActivityClass.E: [e[0]], ActivityClass.L: [e[1]],
                  ActivityClass.WB: [e[2]]}
        assert aggregate_class_distance(groups) == \
            pytest.approx(2 * np.sqrt(2))

    def test_aggregate_needs_two_classes(self):
        with pytest.raises(ValueError):
            aggregate_class_distance({ActivityClass.E: [np.ones(2)]})


class TestSweepSpecValidation:
    def test_bad_fold_count(self):
        with pytest.raises(ValueError):
            SweepSpec(folds=1)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            SweepSpec(methods=("l1-magic",))


class TestEvaluateWithStub:
    def spec(self, **kw):
        defaults = dict(ws_values=(1,), widths_mhz=(125.0,), folds=2,
                        seed=0, band_offsets=(0.0,),
                        methods=("l1-weighting",))
        defaults.update(kw)
        return SweepSpec(**defaults)

    def test_oracle_stub_scores_one(self):
        rng = np.random.default_rng(9)
        data = toy_dataset(rng, per_class=4)
        report = evaluate(data, self.spec(), stub=lambda true, _: true)
        for acc in report.summaries.values():
            assert acc == 1.0

    def test_constant_stub_scores_class_share(self):
        rng = np.random.default_rng(10)
        data = toy_dataset(rng, per_class=4)
        report = evaluate(data, self.spec(),
                          stub=lambda *_: ActivityClass.E)
        for acc in report.summaries.values():
            assert acc == pytest.approx(1 / 8)

    def test_cell_count(self):
        rng = np.random.default_rng(11)
        data = toy_dataset(rng, per_class=4)
        spec = self.spec(ws_values=(1, 2),
                         methods=("l1-voting", "l1-sumup"))
        report = evaluate(data, spec, stub=lambda true, _: true)
        # ws * widths * offsets * folds * methods * modes
        assert len(report.cells) == 2 * 1 * 1 * 2 * 2 * 1

    def test_confusion_totals(self):
        rng = np.random.default_rng(12)
        data = toy_dataset(rng, per_class=4)
        report = evaluate(data, self.spec(), stub=lambda true, _: true)
        (cm,) = report.confusions.values()
        assert cm.total == len(data)  # every ws=1 window tested once

    def test_walking_grouping_reports_binary(self):
        rng = np.random.default_rng(13)
        data = toy_dataset(rng, per_class=4)
        report = evaluate(data, self.spec(), stub=lambda true, _: true,
                          walking_grouping=True)
        (bm,) = report.binary.values()
        assert bm.tpr == 1.0 and bm.fpr == 0.0

    def test_empty_dataset(self):
        with pytest.raises(ValueError):
            evaluate([], self.spec())


class TestEvaluateEndToEnd:
    def test_separable_synthetic_data(self):
        band = BandDescriptor(center_freq_mhz=5800.0,
                              total_bandwidth_mhz=125.0,
                              num_subcarriers=16)
        data = generate(ScenarioConfig(band=band, packets_per_class=6,
                                       seed=3))
        spec = SweepSpec(ws_values=(1,), widths_mhz=(125.0,), folds=2,
                         seed=0, band_offsets=(0.0,),
                         methods=("l1-weighting", KNN_METHOD))
        report = evaluate(data, spec, SolverConfig(tol=1e-5))
        for key, acc in report.summaries.items():
            assert acc > 0.5, key

    def test_report_files(self, tmp_path):
        rng = np.random.default_rng(14)
        data = toy_dataset(rng, per_class=4)
        spec = SweepSpec(ws_values=(1,), widths_mhz=(125.0,), folds=2,
                         seed=0, band_offsets=(0.0,),
                         methods=("l1-voting",))
        report = evaluate(data, spec, stub=lambda true, _: true)
        write_report_json(report, tmp_path / "report.json")
        write_cells_csv(report, tmp_path / "cells.csv")
        obj = json.loads((tmp_path / "report.json").read_text())
        assert "ws=1;B=125.0;method=l1-voting;mode=complex" \
            in obj["summaries"]
        lines = (tmp_path / "cells.csv").read_text().splitlines()
        assert lines[0] == "ws,B,offset,method,mode,fold,accuracy"
        assert len(lines) == 1 + len(report.cells)
