# -*- coding: utf-8 -*-
"""Application configuration.

Most configuration is set via environment variables.

For local development, use a .env file to set
environment variables.
"""
from environs import Env
from marshmallow.validate import OneOf, Range

env = Env()
env.read_env()

SEED = env.int("KDGP_SEED", default=0, validate=Range(min=0))
OUTPUT_DIR = env.path("KDGP_OUTPUT_DIR", default="results")
LOG_LEVEL = env.log_level("KDGP_LOG_LEVEL", default="INFO")
# empty keeps each experiment's own spectral form
SPECTRAL_FORM = env.str(
    "KDGP_SPECTRAL_FORM", default="", validate=OneOf(["", "three_halves", "standard_2d", "paper"])
)
WORKERS = env.int("KDGP_WORKERS", default=1, validate=Range(min=1))
RECORD_TIMING = env.bool("KDGP_RECORD_TIMING", default=False)
