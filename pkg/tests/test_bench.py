import pytest

from errors import InputError, RequestError
from services.bench import draw_inputs, median_of_means, run_bench, time_order
from tests import closed_forms


class TestMedianOfMeans:

    def test_outlier_batch_is_ignored(self):
        samples = [100] * 90 + [10_000] * 10
        assert median_of_means(samples, batches=10) == 100.0

    def test_fewer_samples_than_batches(self):
        assert median_of_means([3, 5], batches=10) == 4.0
        assert median_of_means([7]) == 7.0


class TestDrawInputs:

    def test_seeded_draws_repeat(self):
        ranges = {"S": (90.0, 110.0)}
        first = draw_inputs({"S": 100.0, "K": 102.0}, ranges, 20, seed=3)
        assert first == draw_inputs({"S": 100.0, "K": 102.0}, ranges, 20, seed=3)
        assert first != draw_inputs({"S": 100.0, "K": 102.0}, ranges, 20, seed=4)

    def test_ranges_and_fixed_values(self):
        for inputs in draw_inputs({"S": 100.0, "K": 102.0}, {"S": (90.0, 110.0)}, 50, seed=1):
            assert 90.0 <= inputs["S"] <= 110.0
            assert inputs["K"] == 102.0

    def test_no_ranges(self):
        assert draw_inputs({"x": 1.0}, {}, 3) == [{"x": 1.0}] * 3


class TestTimeOrder:

    def test_outputs_count_the_primal(self, bs_program, bs_inputs):
        price = bs_program.output("price")
        timing = time_order(bs_program, price, ["S", "V"], 2, [bs_inputs] * 4)
        assert timing.outputs == 6
        assert timing.mean_ns > 0
        assert timing.sink != 0.0

    def test_order_zero(self, bs_program, bs_inputs):
        timing = time_order(bs_program, bs_program.output("price"), ["S"], 0, [bs_inputs] * 3)
        assert timing.outputs == 1
        assert timing.sink == pytest.approx(3 * closed_forms.price(**bs_inputs), rel=1e-12)


class TestRunBench:

    def test_single_repetition(self, bs_program, bs_inputs):
        report = run_bench(bs_program, bs_inputs, [0, 3], reps=1, variables=["S", "V"])
        assert [row.order for row in report.bench] == [0, 3]
        assert report.bench[0].R == 1.0
        assert report.bench[0].RR is None
        assert report.bench[1].outputs == 10
        assert report.bench[1].RR is not None

    def test_ranged_variables_need_no_base(self, bs_program, bs_inputs):
        del bs_inputs["S"]
        report = run_bench(bs_program, bs_inputs, [1], reps=2, ranges={"S": (99.0, 101.0)}, seed=8)
        assert report.bench[0].outputs == 6

    def test_errors(self, bs_program, bs_inputs):
        with pytest.raises(RequestError):
            run_bench(bs_program, bs_inputs, [1], reps=0)
        with pytest.raises(RequestError):
            run_bench(bs_program, bs_inputs, [], reps=1)
        with pytest.raises(InputError):
            run_bench(bs_program, bs_inputs, [1], reps=1, variables=["Q"])
        del bs_inputs["T"]
        with pytest.raises(InputError):
            run_bench(bs_program, bs_inputs, [1], reps=1)
