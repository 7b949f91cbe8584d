import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

REPO_ROOT = Path(__file__).resolve().parents[1]
DEMO_SCENE = REPO_ROOT / "demo" / "scene.json"
DEMO_DATASET = REPO_ROOT / "demo" / "director.json"


@pytest.fixture(scope="session")
def demo_scene():
    from directorscut.scene import parse_scene

    return parse_scene(DEMO_SCENE.read_bytes())


@pytest.fixture(scope="session")
def demo_dataset():
    from directorscut.dataset import aggregate, conditional_probabilities, load_director_profile

    profile = load_director_profile(DEMO_DATASET.read_bytes())
    stats = aggregate(profile)
    return profile, stats, conditional_probabilities(stats)


@pytest.fixture(scope="session")
def demo_grids(demo_scene):
    from directorscut.storyboard import bake_grids

    scene, timeline = demo_scene
    return bake_grids(scene, timeline)


@pytest.fixture(scope="session")
def demo_storyboard(demo_scene, demo_dataset, demo_grids):
    from directorscut.selection import RuleParams
    from directorscut.storyboard import simulate_all

    scene, timeline = demo_scene
    _, stats, model = demo_dataset
    grids, vis_grids = demo_grids
    return simulate_all(
        scene, timeline, model, stats, RuleParams(), seed=42,
        grids=grids, vis_grids=vis_grids,
        scene_path="demo/scene.json", dataset_path="demo/director.json",
    )
