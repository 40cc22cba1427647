# -*- coding: utf-8 -*-
"""The experiment harness: configuration, metrics, experiments and result files."""
