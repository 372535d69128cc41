import hypothesis

# Property tests must not inject run-to-run randomness; every failure
# seen in CI should replay locally from the same seed.
hypothesis.settings.register_profile(
    "det", hypothesis.settings(derandomize=True, deadline=None))
hypothesis.settings.load_profile("det")
