from scanb.harness.dataset import NOVEL_EPISODES, build_dataset


def test_episode_counts(dataset, session_config) -> None:
    """Ensures that base and novel environments get their episode counts."""
    manifest, records = dataset

    assert set(records) == {*manifest.base_env_ids, *manifest.novel_env_ids}
    for env_id in manifest.base_env_ids:
        assert len(records[env_id]) == session_config.data.episodes_per_env
    for env_id in manifest.novel_env_ids:
        assert len(records[env_id]) == NOVEL_EPISODES


def test_episode_settings(dataset, session_config) -> None:
    """Ensures that episodes follow the configured shots and sizes."""
    _, records = dataset
    size = session_config.data.frame_size

    for episodes in records.values():
        for episode in episodes:
            assert episode.shots == session_config.data.shots
            assert episode.query.frames.shape[-2:] == (size, size)


def test_only_data_seed_matters(dataset, tiny_config) -> None:
    """Ensures that output paths do not change the recorded data."""
    manifest, records = dataset
    rebuilt_manifest, rebuilt = build_dataset(tiny_config)

    assert rebuilt_manifest == manifest
    assert rebuilt == records
