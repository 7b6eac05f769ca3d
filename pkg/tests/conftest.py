import os
import sys

from hypothesis import settings

# test modules import shared helpers (oracles, strategies) from this directory
sys.path.insert(0, os.path.dirname(__file__))

# fixed example sequences keep the suite reproducible run to run
settings.register_profile("repro", derandomize=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repro"))
