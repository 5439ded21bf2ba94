"""Tests for relaxation schedules, their metadata and the CLI flag parser."""

from __future__ import annotations

import math

import numpy as np
import pytest

from marp.errors import InvalidParameterError, ScheduleExhaustedError
from marp.models.enums import Exactness
from marp.models.schemas import (
    ConstantSchedule,
    DyadicRatioSchedule,
    DyadicSqrtSchedule,
    ExplicitSchedule,
    ExplicitTail,
    GeometricSchedule,
    HarmonicSchedule,
    MonotoneToLimitSchedule,
)
from marp.services import schedules


def test_closed_form_values():
    assert schedules.value(ConstantSchedule(value=0.3), 7) == 0.3
    assert schedules.value(GeometricSchedule(initial=0.5, ratio=0.5), 3) == 0.0625
    assert schedules.value(HarmonicSchedule(), 0) == 0.5
    assert schedules.value(HarmonicSchedule(c=0.5), 8) == 0.05
    assert schedules.value(DyadicRatioSchedule(), 0) == pytest.approx(0.25)
    assert schedules.value(DyadicRatioSchedule(), 1) == pytest.approx(1.0 / 6.0)
    assert schedules.value(DyadicSqrtSchedule(delta=1.0), 0) == pytest.approx(
        1.0 - math.sqrt(0.75)
    )


def test_monotone_schedule_approaches_its_limit():
    schedule = MonotoneToLimitSchedule(initial=0.9, limit=0.4, decay=0.5)
    seq = schedules.values(schedule, 40)
    assert seq[0] == 0.9
    assert seq[1] == pytest.approx(0.65)
    assert seq[-1] == pytest.approx(0.4, abs=1e-10)
    assert all(seq[:-1] >= seq[1:])


def test_explicit_schedule_tails():
    listed = [0.8, 0.4]
    held = ExplicitSchedule(values=listed, tail=ExplicitTail(rule="hold"))
    assert schedules.value(held, 5) == 0.4
    decaying = ExplicitSchedule(
        values=listed, tail=ExplicitTail(rule="geometric", ratio=0.5)
    )
    assert schedules.value(decaying, 2) == 0.2
    assert schedules.value(decaying, 3) == 0.1

    bare = ExplicitSchedule(values=listed)
    assert schedules.value(bare, 1) == 0.4
    with pytest.raises(ScheduleExhaustedError):
        schedules.value(bare, 2)


def test_negative_index_is_rejected():
    with pytest.raises(InvalidParameterError):
        schedules.value(ConstantSchedule(value=0.5), -1)


def test_describe_reports_closed_form_metadata():
    meta = schedules.describe(GeometricSchedule(initial=0.8, ratio=0.9))
    assert (meta.initial, meta.limit, meta.sup_ratio) == (0.8, 0.0, 0.9)
    assert meta.monotone
    assert meta.exactness == Exactness.ANALYTIC

    meta = schedules.describe(DyadicRatioSchedule())
    assert meta.sup_ratio == pytest.approx(2.0 / 3.0)
    assert meta.exactness == Exactness.ANALYTIC

    meta = schedules.describe(ConstantSchedule(value=0.5))
    assert (meta.limit, meta.sup_ratio) == (0.5, 1.0)


def test_describe_scans_harmonic_over_the_horizon():
    meta = schedules.describe(HarmonicSchedule(), horizon=100)
    assert meta.sup_ratio == pytest.approx(102.0 / 103.0)
    assert meta.exactness == Exactness.NUMERIC


def test_describe_explicit_with_geometric_tail_is_exact():
    schedule = ExplicitSchedule(
        values=[0.8, 0.6, 0.3], tail=ExplicitTail(rule="geometric", ratio=0.5)
    )
    meta = schedules.describe(schedule)
    assert meta.sup_ratio == pytest.approx(0.75)
    assert meta.limit == 0.0
    assert meta.monotone
    assert meta.exactness == Exactness.ANALYTIC


def test_pair_meta_combines_both_schedules():
    meta = schedules.pair_meta(
        ConstantSchedule(value=0.4), GeometricSchedule(initial=0.7, ratio=0.8)
    )
    assert meta.alpha0 == 0.7
    assert meta.alpha_inf == 0.0
    assert meta.sup_ratio == 1.0
    assert meta.exactness == Exactness.ANALYTIC


@pytest.mark.parametrize(
    "text, expected",
    [
        ("const:0.5", ConstantSchedule(value=0.5)),
        ("geom:0.5:0.9", GeometricSchedule(initial=0.5, ratio=0.9)),
        (
            "monotone:0.9:0.3:0.5",
            MonotoneToLimitSchedule(initial=0.9, limit=0.3, decay=0.5),
        ),
        ("dyadic-sqrt", DyadicSqrtSchedule(delta=1.0)),
        ("dyadic-sqrt:0.25", DyadicSqrtSchedule(delta=0.25)),
        ("dyadic-ratio", DyadicRatioSchedule()),
        ("harmonic", HarmonicSchedule(c=1.0)),
        ("explicit:0.8,0.4:hold", ExplicitSchedule(
            values=[0.8, 0.4], tail=ExplicitTail(rule="hold"))),
        ("explicit:0.8,0.4:geom:0.5", ExplicitSchedule(
            values=[0.8, 0.4], tail=ExplicitTail(rule="geometric", ratio=0.5))),
    ],
)
def test_parse_flag(text, expected):
    assert schedules.parse_flag(text) == expected


@pytest.mark.parametrize("text", ["const", "const:2", "geom:0.5", "bogus:1", ""])
def test_parse_flag_rejects_bad_input(text):
    with pytest.raises(InvalidParameterError):
        schedules.parse_flag(text)


_MONOTONE_KINDS = [
    ConstantSchedule(value=0.7),
    GeometricSchedule(initial=0.5, ratio=0.5),
    GeometricSchedule(initial=1.0, ratio=0.99),
    MonotoneToLimitSchedule(initial=0.9, limit=0.0, decay=0.3),
    MonotoneToLimitSchedule(initial=0.9, limit=0.2, decay=0.8),
    DyadicSqrtSchedule(delta=1.0),
    DyadicSqrtSchedule(delta=0.01),
    DyadicRatioSchedule(),
    HarmonicSchedule(),
    HarmonicSchedule(c=0.3),
    ExplicitSchedule(values=[0.9, 0.5], tail=ExplicitTail(rule="geometric", ratio=0.1)),
]


@pytest.mark.parametrize("schedule", _MONOTONE_KINDS)
def test_every_value_lies_in_the_unit_interval(schedule):
    seq = schedules.values(schedule, 10_001)
    assert np.all(seq > 0.0)
    assert np.all(seq <= 1.0)


@pytest.mark.parametrize("schedule", _MONOTONE_KINDS)
def test_monotone_schedules_never_increase(schedule):
    assert schedules.describe(schedule, horizon=200).monotone
    seq = schedules.values(schedule, 10_001)
    assert np.all(np.diff(seq) <= 0.0)


@pytest.mark.parametrize("n", [52, 53, 60, 200])
def test_dyadic_values_stay_positive_deep_into_the_orbit(n):
    ratio = schedules.value(DyadicRatioSchedule(), n)
    assert ratio == pytest.approx(2.0 ** -(n + 1) / (1.0 + 2.0**-n), rel=1e-12)
    root = schedules.value(DyadicSqrtSchedule(delta=1.0), n)
    assert root == pytest.approx(2.0 ** -(n + 2) / (1.0 + 2.0**-n), rel=1e-12)


@pytest.mark.parametrize("delta", [1.0, 0.25, 3.0])
def test_dyadic_sqrt_product_telescopes(delta):
    seq = schedules.values(DyadicSqrtSchedule(delta=delta), 201)
    products = np.cumprod((1.0 - seq) ** 2)
    n = np.arange(201)
    expected = (delta + 2.0 ** -(n + 1)) / (delta + 1.0)
    np.testing.assert_allclose(products, expected, rtol=1e-12)


def test_underflowing_terms_do_not_distort_the_scanned_ratio():
    schedule = MonotoneToLimitSchedule(initial=0.9, limit=0.0, decay=0.3)
    meta = schedules.describe(schedule, horizon=10_000)
    assert meta.sup_ratio == pytest.approx(0.3)
