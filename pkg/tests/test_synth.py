import json
from dataclasses import replace

from directorscut.dataset import load_director_profile, profile_to_dict
from directorscut.synth import SynthesisSpec, TechniqueUsage, default_spec, synthesize_dataset
from directorscut.techniques import Technique


def test_deterministic_for_seed():
    a1, b1 = synthesize_dataset(seed=1)
    a2, b2 = synthesize_dataset(seed=1)
    assert json.dumps(profile_to_dict(a1)) == json.dumps(profile_to_dict(a2))
    assert json.dumps(profile_to_dict(b1)) == json.dumps(profile_to_dict(b2))
    a3, _ = synthesize_dataset(seed=2)
    assert profile_to_dict(a3) != profile_to_dict(a1)


def test_forced_occurrence():
    spec = default_spec()
    usage = dict(spec.director_a.usage)
    usage[Technique.CLOSE_UP] = TechniqueUsage(occurrence=1.0, extra_mean=0.5)
    spec = SynthesisSpec(
        director_a=replace(spec.director_a, usage=usage),
        director_b=spec.director_b,
        clips_per_director=40,
    )
    profile_a, _ = synthesize_dataset(spec, seed=3)
    assert all(c.counts[Technique.CLOSE_UP] >= 1 for c in profile_a.clips)


def test_occurrence_rates_near_targets():
    profile_a, profile_b = synthesize_dataset(default_spec(), seed=0)
    rate_a = sum(c.counts[Technique.GODS_EYE] > 0 for c in profile_a.clips) / 80
    rate_b = sum(c.counts[Technique.GODS_EYE] > 0 for c in profile_b.clips) / 80
    assert abs(rate_a - 0.337) <= 0.10
    assert abs(rate_b - 0.0875) <= 0.10
    steady_a = sum(c.counts[Technique.STEADYCAM_TRACKING] > 0 for c in profile_a.clips) / 80
    steady_b = sum(c.counts[Technique.STEADYCAM_TRACKING] > 0 for c in profile_b.clips) / 80
    assert abs(steady_a - 0.124) <= 0.10
    assert abs(steady_b - 0.246) <= 0.10


def test_output_satisfies_profile_schema():
    profile_a, profile_b = synthesize_dataset(default_spec(), seed=4)
    for profile in (profile_a, profile_b):
        parsed = load_director_profile(json.dumps(profile_to_dict(profile)))
        assert parsed == profile
