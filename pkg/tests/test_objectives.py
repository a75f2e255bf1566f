import numpy as np
import pytest

from oraclebo import objectives
from oraclebo.objectives import (
    BRANIN_MINIMIZERS,
    BRANIN_MINIMUM,
    HARTMANN6_MINIMIZER,
    HARTMANN6_MINIMUM,
    ActiveSubsetObjective,
    ObjectiveAdapter,
    dimension_query,
    evaluate,
    make_objective,
    regret,
    to_native,
    to_normalized,
)


class TestBenchmarkValues:
    @pytest.mark.parametrize("minimizer", BRANIN_MINIMIZERS)
    def test_branin_minima(self, minimizer):
        spec = make_objective("Branin")
        h = to_normalized(spec, np.array(minimizer))
        assert evaluate(spec, h) == pytest.approx(BRANIN_MINIMUM, abs=1e-5)

    def test_hartmann6_minimum(self):
        spec = make_objective("Hartmann6")
        h = to_normalized(spec, np.array(HARTMANN6_MINIMIZER))
        assert evaluate(spec, h) == pytest.approx(HARTMANN6_MINIMUM, abs=1e-4)

    def test_rosenbrock_all_ones(self):
        spec = make_objective("Rosenbrock", 4)
        h = to_normalized(spec, np.ones(4))
        assert evaluate(spec, h) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("name", ["P1", "P2", "P3"])
    def test_staircase_zero_at_origin(self, name):
        spec = make_objective(name, 10)
        assert evaluate(spec, np.zeros(10)) == 0.0

    def test_p2_at_native_one_point_five(self):
        spec = make_objective("P2", 10)
        h = to_normalized(spec, np.full(10, 1.5))
        assert evaluate(spec, h) == 10.0

    def test_p1_floor_squared(self):
        spec = make_objective("P1", 3)
        h = to_normalized(spec, np.array([2.0, -3.0, 0.4]))
        # floor(|2.5|)^2 + floor(|-2.5|)^2 + floor(|0.9|)^2 = 4 + 4 + 0
        assert evaluate(spec, h) == 8.0

    def test_minimum_attained_at_canonical_minimizer(self):
        for name, n in [("P1", 30), ("P2", 30), ("P3", 30), ("Branin", 10), ("Hartmann6", 10), ("Rosenbrock", 10)]:
            spec = make_objective(name, n)
            h = to_normalized(spec, spec.canonical_minimizer)
            assert evaluate(spec, h) == pytest.approx(spec.known_minimum, abs=1e-6), name


class TestEvaluateContract:
    def test_dimension_mismatch(self):
        spec = make_objective("P1", 5)
        with pytest.raises(ValueError):
            evaluate(spec, np.zeros(4))

    def test_outside_box_rejected(self):
        spec = make_objective("P1", 3)
        with pytest.raises(ValueError):
            evaluate(spec, np.array([0.0, 1.5, 0.0]))

    def test_unknown_objective(self):
        with pytest.raises(ValueError):
            make_objective("P9")

    @pytest.mark.parametrize(
        "name,n", [("P1", 20), ("P2", 20), ("P3", 20), ("Branin", 20), ("Hartmann6", 20), ("Rosenbrock", 20)]
    )
    def test_lower_bound_property(self, name, n):
        spec = make_objective(name, n)
        gen = np.random.Generator(np.random.Philox(key=hash(name) % 2**63))
        pts = gen.uniform(-1, 1, size=(100_000, n))
        floor = spec.known_minimum - 1e-9
        vals = np.fromiter((evaluate(spec, p) for p in pts), dtype=float, count=pts.shape[0])
        assert vals.min() >= floor

    @pytest.mark.parametrize("name", ["P1", "P2", "P3"])
    def test_staircase_zero_gradient_plateaus(self, name):
        spec = make_objective(name, 8)
        gen = np.random.Generator(np.random.Philox(key=4))
        eps = 1e-6
        checked = 0
        for _ in range(100):
            h = gen.uniform(-0.99, 0.99, size=8)
            base = evaluate(spec, h)
            j = int(gen.integers(0, 8))
            for sign in (1.0, -1.0):
                hp = h.copy()
                hp[j] += sign * eps
                x0 = to_native(spec, h)[j]
                x1 = to_native(spec, hp)[j]
                if name == "P1":
                    crossed = np.floor(abs(x0 + 0.5)) != np.floor(abs(x1 + 0.5))
                elif name == "P2":
                    crossed = np.floor(abs(x0)) != np.floor(abs(x1))
                else:
                    crossed = np.floor(x0**2) != np.floor(x1**2)
                if not crossed:
                    assert evaluate(spec, hp) == base
                    checked += 1
        assert checked > 100  # the plateau case dominates


class TestDimensionQuery:
    def test_staircase_reveals_zero(self):
        spec = make_objective("P1", 12)
        for j in (0, 5, 11):
            fact = dimension_query(spec, j)
            assert fact.index == j and fact.value == 0.0

    def test_branin_first_coordinate(self):
        spec = make_objective("Branin")
        fact = dimension_query(spec, 0)
        assert fact.value == pytest.approx(2 * (np.pi + 5) / 15 - 1, abs=1e-9)
        assert fact.value == pytest.approx(0.08554, abs=1e-4)

    def test_rosenbrock_normalized_minimizer(self):
        spec = make_objective("Rosenbrock", 4)
        fact = dimension_query(spec, 2)
        assert fact.value == pytest.approx(-0.2, abs=1e-12)

    def test_out_of_range_index(self):
        spec = make_objective("P1", 4)
        with pytest.raises(IndexError):
            dimension_query(spec, 4)
        with pytest.raises(IndexError):
            dimension_query(spec, -1)

    def test_values_normalized(self):
        for name in ("P1", "Branin", "Hartmann6", "Rosenbrock"):
            spec = make_objective(name, 10)
            for j in range(10):
                assert abs(dimension_query(spec, j).value) <= 1.0


class TestRegret:
    def test_zero_at_minimum(self):
        spec = make_objective("Branin")
        assert regret(spec, BRANIN_MINIMUM) == 0.0

    def test_branin_subtraction(self):
        spec = make_objective("Branin")
        assert regret(spec, 1.0) == pytest.approx(0.602113, abs=1e-6)

    def test_p1_identity(self):
        spec = make_objective("P1", 500)
        assert regret(spec, 83.0) == 83.0

    def test_below_minimum_rejected(self):
        spec = make_objective("P1", 5)
        with pytest.raises(ValueError):
            regret(spec, -1.0)


class TestAdapters:
    def test_objective_adapter(self):
        adapter = ObjectiveAdapter(make_objective("P2", 6))
        assert adapter.n_high == 6
        assert adapter.known_minimum == 0.0
        assert adapter.supports_sweep
        assert adapter.evaluate(np.zeros(6)) == 0.0
        assert adapter.query(2).value == 0.0

    def test_active_subset_objective(self):
        obj = ActiveSubsetObjective(10, (1, 4))
        h = np.zeros(10)
        assert obj.evaluate(h) == 0.0
        h[0] = 0.9  # inert coordinate: no effect
        assert obj.evaluate(h) == 0.0
        h[1] = 0.5  # native 50: floor(50.5)^2
        assert obj.evaluate(h) == 2500.0

    def test_active_subset_validation(self):
        with pytest.raises(ValueError):
            ActiveSubsetObjective(5, (7,))
        with pytest.raises(ValueError):
            ActiveSubsetObjective(5, ())
