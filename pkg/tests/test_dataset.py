import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from directorscut.dataset import (
    aggregate,
    category_frequencies,
    conditional_probabilities,
    load_director_profile,
    member_style_means,
    profile_to_dict,
)
from directorscut.errors import EmptyProfileError, RangeError, SchemaError
from directorscut.techniques import ANNOTATED, CATEGORY_MEMBERS, Category, Technique
from helpers import make_clip, make_profile, profile_json


class TestLoadProfile:
    def test_round_trip(self):
        clips = [make_clip({Technique.CLOSE_UP: 2}), make_clip({Technique.PAN: 1})]
        profile = load_director_profile(profile_json(clips))
        assert profile.director_name == "tester"
        assert len(profile.clips) == 2
        assert profile.clips[0].counts[Technique.CLOSE_UP] == 2
        # parse(serialize(parse(x))) is stable
        again = load_director_profile(json.dumps(profile_to_dict(profile)))
        assert again == profile

    def test_dramatisation_out_of_range(self):
        doc = json.loads(profile_json([make_clip()]))
        doc["clips"][0]["dramatisation"] = 1.2
        with pytest.raises(RangeError):
            load_director_profile(json.dumps(doc))

    def test_missing_technique_key(self):
        doc = json.loads(profile_json([make_clip()]))
        del doc["clips"][0]["counts"]["cut"]
        with pytest.raises(SchemaError):
            load_director_profile(json.dumps(doc))

    def test_unknown_technique_key(self):
        doc = json.loads(profile_json([make_clip()]))
        doc["clips"][0]["counts"]["zoom_out"] = 1
        with pytest.raises(SchemaError):
            load_director_profile(json.dumps(doc))

    def test_empty_profile(self):
        with pytest.raises(EmptyProfileError):
            load_director_profile(json.dumps({"director": "x", "clips": []}))

    def test_negative_count(self):
        doc = json.loads(profile_json([make_clip()]))
        doc["clips"][0]["counts"]["pan"] = -1
        with pytest.raises(SchemaError):
            load_director_profile(json.dumps(doc))


class TestAggregate:
    def test_weighted_mean(self):
        # hand evaluation: (2*0.4 + 1*1.0) / 3 = 0.6
        profile = make_profile(
            [make_clip({Technique.CLOSE_UP: 2}, d=0.4), make_clip({Technique.CLOSE_UP: 1}, d=1.0)]
        )
        stats = aggregate(profile)
        assert stats.frequency[Technique.CLOSE_UP] == 3
        assert stats.mean_dramatisation[Technique.CLOSE_UP] == pytest.approx(0.6)
        assert stats.clip_count == 2

    def test_all_zero(self):
        stats = aggregate(make_profile([make_clip()]))
        assert all(f == 0 for f in stats.frequency.values())
        assert stats.mean_dramatisation == {}
        assert stats.mean_pace == {}

    def test_duplicate_clip_doubles_frequency(self):
        clips = [make_clip({Technique.PAN: 2, Technique.LONG: 1}, d=0.3, p=0.7)]
        base = aggregate(make_profile(clips))
        doubled = aggregate(make_profile(clips + clips))
        for tech in ANNOTATED:
            assert doubled.frequency[tech] == 2 * base.frequency[tech]
        assert doubled.mean_dramatisation == base.mean_dramatisation
        assert doubled.mean_pace == base.mean_pace

    @given(st.permutations(range(4)))
    def test_permutation_invariant(self, order):
        clips = [
            make_clip({Technique.CLOSE_UP: 1}, d=0.1),
            make_clip({Technique.CLOSE_UP: 3, Technique.PAN: 2}, d=0.9),
            make_clip({Technique.CUT: 5}, d=0.4, p=0.2),
            make_clip({}, d=0.5),
        ]
        base = aggregate(make_profile(clips))
        shuffled = aggregate(make_profile([clips[i] for i in order]))
        assert shuffled == base


class TestConditionalProbabilities:
    def test_direct_ratio(self):
        profile = make_profile(
            [make_clip({Technique.CLOSE_UP: 6, Technique.MEDIUM: 3, Technique.PAN: 1})]
        )
        model = conditional_probabilities(aggregate(profile))
        pos = model.probabilities[Category.POSITIONING]
        assert pos[Technique.CLOSE_UP] == pytest.approx(0.6, abs=1e-12)
        assert pos[Technique.MEDIUM] == pytest.approx(0.3, abs=1e-12)
        assert pos[Technique.PAN] == pytest.approx(0.1, abs=1e-12)
        assert pos[Technique.LONG] == 0.0

    def test_single_member_nonzero(self):
        profile = make_profile([make_clip({Technique.GODS_EYE: 4})])
        model = conditional_probabilities(aggregate(profile))
        assert model.probabilities[Category.POSITIONING][Technique.GODS_EYE] == 1.0

    def test_outside_category_is_zero(self):
        profile = make_profile([make_clip({Technique.CLOSE_UP: 5})])
        model = conditional_probabilities(aggregate(profile))
        assert model.probability(Category.LOOK, Technique.CLOSE_UP) == 0.0
        assert model.probability(Category.FX, Technique.CLOSE_UP) == 0.0

    def test_rest_choices_absorb_leftover_mass(self):
        # 3 clips, one slow-motion occurrence: NO_FX carries the other 2
        profile = make_profile(
            [make_clip({Technique.SLOW_MOTION: 1}), make_clip(), make_clip()]
        )
        stats = aggregate(profile)
        freqs = category_frequencies(stats, Category.FX)
        assert freqs[Technique.SLOW_MOTION] == 1
        assert freqs[Technique.NO_FX] == 2
        model = conditional_probabilities(stats)
        assert model.probability(Category.FX, Technique.NO_FX) == pytest.approx(2 / 3)

    def test_stationary_shot_inherits_tracking_frequency(self):
        profile = make_profile([make_clip({Technique.STATIONARY_TRACKING: 4})])
        freqs = category_frequencies(aggregate(profile), Category.LOOK)
        assert freqs[Technique.STATIONARY_SHOT] == 4

    @given(
        st.lists(
            st.tuples(
                st.dictionaries(st.sampled_from(list(ANNOTATED)), st.integers(0, 50)),
                st.floats(0, 1),
            ),
            min_size=1,
            max_size=6,
        ),
        st.integers(2, 9),
    )
    @settings(max_examples=60, deadline=None)
    def test_scale_invariance_and_sums(self, raw_clips, k):
        clips = [make_clip(counts, d=d, p=d) for counts, d in raw_clips]
        scaled = [
            make_clip({t: n * k for t, n in c.counts.items()}, d=c.dramatisation, p=c.pace)
            for c in clips
        ]
        base = conditional_probabilities(aggregate(make_profile(clips)))
        # scaling clip counts leaves the ratios alone for all-annotated categories
        pos_base = base.probabilities[Category.POSITIONING]
        pos_scaled = conditional_probabilities(aggregate(make_profile(scaled))).probabilities[
            Category.POSITIONING
        ]
        for tech in CATEGORY_MEMBERS[Category.POSITIONING]:
            assert pos_scaled[tech] == pytest.approx(pos_base[tech], abs=1e-12)
        for category, probs in base.probabilities.items():
            total = sum(probs.values())
            assert total == pytest.approx(0.0, abs=1e-9) or total == pytest.approx(
                1.0, abs=1e-9
            )


def test_member_style_means_mapping():
    profile = make_profile(
        [make_clip({Technique.STATIONARY_TRACKING: 2}, d=0.8, p=0.2), make_clip()]
    )
    stats = aggregate(profile)
    assert member_style_means(stats, Technique.STATIONARY_SHOT) == pytest.approx((0.8, 0.2))
    assert member_style_means(stats, Technique.NO_FX) is None
    assert member_style_means(stats, Technique.CLOSE_UP) is None  # never used
