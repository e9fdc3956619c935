import pytest

from scanb.data.splits import build_splits
from scanb.exceptions import ConfigurationError
from scanb.world.spec import split_palettes


@pytest.mark.parametrize('task', ['PP', 'PPP'])
def test_ids_are_disjoint(task: str) -> None:
    """Ensures that no environment is both base and novel."""
    manifest = build_splits(4, 3, task, seed=1)

    assert len(manifest.base_env_ids) == 4
    assert len(manifest.novel_env_ids) == 3
    assert not set(manifest.base_env_ids) & set(manifest.novel_env_ids)
    assert all(spec.split == 'base' for spec in manifest.base_specs)
    assert all(spec.split == 'novel' for spec in manifest.novel_specs)


def test_novel_colors_are_unseen() -> None:
    """Ensures that novel objects only use colors of the novel palette."""
    manifest = build_splits(5, 3, 'PPP', seed=2)
    base_palette, novel_palette = split_palettes(8)
    base_colors = {
        obj.color for spec in manifest.base_specs for obj in spec.objects
    }
    novel_colors = {
        obj.color for spec in manifest.novel_specs for obj in spec.objects
    }

    assert base_colors <= set(base_palette)
    assert novel_colors <= set(novel_palette)
    assert not base_colors & novel_colors


def test_assignments_are_unique() -> None:
    """Ensures that environments of one split look different."""
    manifest = build_splits(6, 1, 'PP', seed=4)
    assignments = [
        tuple(obj.color for obj in spec.objects)
        for spec in manifest.base_specs
    ]

    assert len(set(assignments)) == len(assignments)


def test_splits_are_seeded() -> None:
    """Ensures that one seed always gives the same environments."""
    assert build_splits(2, 2, 'PP', seed=9) == build_splits(2, 2, 'PP', seed=9)
    assert build_splits(2, 2, 'PP', seed=9) != build_splits(2, 2, 'PP', seed=8)


@pytest.mark.parametrize(('n_base', 'n_novel', 'task', 'palette'), [
    (0, 1, 'PP', 8),
    (1, 0, 'PP', 8),
    (1, 1, 'PQ', 8),
    (1, 1, 'PPP', 3),
])
def test_invalid_requests(n_base, n_novel, task, palette) -> None:
    """Ensures that impossible splits are configuration errors."""
    with pytest.raises(ConfigurationError):
        build_splits(n_base, n_novel, task, seed=0, palette_size=palette)
