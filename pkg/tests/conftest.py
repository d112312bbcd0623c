import hypothesis

# Fit-backed properties can be slow on a cold interpreter; wall-clock
# deadlines would make them flaky without catching real regressions.
hypothesis.settings.register_profile("package", deadline=None, max_examples=100)
hypothesis.settings.load_profile("package")
