import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lagscope.errors import DuplicateTickError, ParseError, RangeError, ValidationError
from lagscope.series import (
    EventSeries,
    SampledSeries,
    WeightFunction,
    dump_events,
    dump_sampled,
    load_events,
    load_sampled,
    load_weighted,
    read_weighted,
    to_indicator,
    write_weighted,
    WeightedDatum,
)


@st.composite
def event_series(draw, max_m=200):
    m = draw(st.integers(1, max_m))
    ticks = draw(st.sets(st.integers(0, m - 1), max_size=m))
    return EventSeries(sorted(ticks), m)


class TestLoadEvents:
    def test_basic(self):
        e = load_events(b"2\n5\n9", m=10)
        assert e.ticks.tolist() == [2, 5, 9]
        assert e.span_m == 10

    def test_empty(self):
        e = load_events(b"", m=10)
        assert e.n == 0 and e.span_m == 10

    def test_duplicate(self):
        with pytest.raises(DuplicateTickError):
            load_events(b"5\n5", m=10)

    def test_header(self):
        e = load_events(io.BytesIO(b"# M=12\n3\n11\n"))
        assert e.span_m == 12 and e.ticks.tolist() == [3, 11]

    def test_missing_m(self):
        with pytest.raises(ValidationError, match="M"):
            load_events(b"1\n2\n")

    def test_conflicting_m(self):
        with pytest.raises(ValidationError, match="conflicts"):
            load_events(b"# M=12\n1\n", m=10)

    def test_non_integer(self):
        with pytest.raises(ParseError, match="line 2"):
            load_events(b"1\n2.5\n", m=10)

    def test_unsorted_names_line(self):
        with pytest.raises(ValidationError, match="line 3"):
            load_events(b"1\n7\n4\n", m=10)

    def test_out_of_range(self):
        with pytest.raises(RangeError):
            load_events(b"1\n10\n", m=10)
        with pytest.raises(RangeError):
            load_events(b"-1\n", m=10)

    def test_csv_with_header(self):
        e = load_events(b"tick,energy\n1,5.0\n4,2.2\n", m=6, fmt="csv")
        assert e.ticks.tolist() == [1, 4]

    @settings(max_examples=60, deadline=None)
    @given(event_series())
    def test_round_trip(self, e):
        assert load_events(dump_events(e)) == e


class TestIndicator:
    @pytest.mark.parametrize("ticks,m,bits", [
        ([0], 3, [1, 0, 0]),
        ([], 2, [0, 0]),
        ([1, 2], 4, [0, 1, 1, 0]),
    ])
    def test_examples(self, ticks, m, bits):
        assert to_indicator(EventSeries(ticks, m)).bits.tolist() == bits

    @settings(max_examples=60, deadline=None)
    @given(event_series())
    def test_round_trip(self, e):
        ind = to_indicator(e)
        assert ind.n == e.n
        assert np.array_equal(ind.ticks(), e.ticks)


class TestEventSeriesInvariants:
    def test_immutable(self):
        e = EventSeries([1, 2], 5)
        with pytest.raises(ValueError):
            e.ticks[0] = 3

    def test_rejects_unsorted(self):
        with pytest.raises(ValidationError):
            EventSeries([3, 1], 5)


class TestLoadSampled:
    def test_basic(self):
        s = load_sampled(b"t,y,sigma\n0,1.0,0.5\n1,2.0,0.5\n")
        assert s.values.tolist() == [1.0, 2.0]
        assert s.sigmas.tolist() == [0.5, 0.5]
        assert s.dt == 1.0

    def test_uneven(self):
        with pytest.raises(ValidationError, match="evenly spaced"):
            load_sampled(b"t,y,sigma\n0,1,1\n1,1,1\n2.5,1,1\n")

    def test_zero_sigma(self):
        with pytest.raises(ValidationError, match="sigma"):
            load_sampled(b"t,y,sigma\n0,1,1\n1,1,0\n")

    def test_round_trip(self):
        rng = np.random.default_rng(3)
        s = SampledSeries(rng.normal(size=20), rng.uniform(0.1, 2, 20), dt=0.25)
        back = load_sampled(dump_sampled(s))
        assert np.array_equal(back.values, s.values)
        assert np.array_equal(back.sigmas, s.sigmas)
        assert back.dt == pytest.approx(0.25, rel=1e-12)


class TestWeightFunction:
    def test_validation(self):
        with pytest.raises(ValidationError):
            WeightFunction.boxcar(2, 1)
        with pytest.raises(ValidationError):
            WeightFunction.gaussian(0, 0)
        with pytest.raises(ValidationError):
            WeightFunction.tabulated([0, 1], [1, 1.5])

    def test_tabulated_normalize_on_load(self):
        w = WeightFunction.tabulated([0, 1, 2], [0.5, 0.5, 0.5 * 1.005], normalize=True)
        assert w.cdf(2.0) == pytest.approx(1.0, abs=1e-12)
        with pytest.raises(ValidationError, match="1%"):
            WeightFunction.tabulated([0, 1], [1.5, 1.5], normalize=True)

    def test_tabulated_cdf_matches_quadrature(self):
        from scipy import integrate
        xs = np.array([0.0, 0.3, 1.0, 1.4])
        ds = np.array([0.2, 1.0, 0.6, 0.0])
        ds = ds / np.trapezoid(ds, xs)
        w = WeightFunction.tabulated(xs, ds)
        for z in (-1.0, 0.1, 0.3, 0.77, 1.2, 5.0):
            ref = integrate.quad(lambda t: np.interp(t, xs, ds, left=0, right=0), -2, z,
                                 points=[p for p in xs if -2 < p < z] or None, limit=100)[0]
            assert w.cdf(z) == pytest.approx(ref, abs=1e-10)

    def test_centers(self):
        assert WeightFunction.boxcar(1, 3).center == 2
        w = WeightFunction.tabulated([0, 1, 2], [0, 1, 0])
        assert w.center == pytest.approx(1.0)


def test_weighted_file_round_trip(tmp_path):
    xs = np.array([0.0, 1.0, 2.0])
    ds = np.array([0.0, 1.0, 0.0])
    data = [
        WeightedDatum(1.5, 0.2, 0.1, WeightFunction.delta(0.2)),
        WeightedDatum(2.5, 0.5, 0.2, WeightFunction.boxcar(0.4, 0.6)),
        WeightedDatum(3.0, 0.7, 0.3, WeightFunction.gaussian(0.7, 0.05)),
        WeightedDatum(0.5, 1.0, 0.4, WeightFunction.tabulated(xs, ds)),
    ]
    path = tmp_path / "data.csv"
    write_weighted(path, data)
    back = read_weighted(path)
    assert len(back) == 4
    for a, b in zip(data, back):
        assert (a.x, a.y, a.sigma, a.weight.kind) == (b.x, b.y, b.sigma, b.weight.kind)
        assert a.weight.cdf(0.55) == pytest.approx(b.weight.cdf(0.55), abs=1e-15)


def test_weighted_delta_center_defaults_to_x():
    data = load_weighted(b"x,y,sigma,wkind,w1,w2\n0.5,1,0.1,delta,,\n")
    assert data[0].weight.params == (0.5,)


def test_weighted_rejects_bad_sigma():
    with pytest.raises(ValidationError, match="line 2"):
        load_weighted(b"x,y,sigma,wkind,w1,w2\n0.5,1,0,delta,,\n")


def test_tabulated_sidecar(tmp_path):
    (tmp_path / "w.json").write_text(json.dumps({"abscissae": [0, 2], "densities": [0.5, 0.5]}))
    (tmp_path / "d.csv").write_text("x,y,sigma,wkind,w1,w2\n1,2,0.5,tabulated,w.json,\n")
    d = read_weighted(tmp_path / "d.csv")
    assert d[0].weight.cdf(1.0) == pytest.approx(0.5)
