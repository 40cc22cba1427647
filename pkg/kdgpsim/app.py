# -*- coding: utf-8 -*-
"""The app module, containing the app factory function."""
import importlib
import logging
import sys

import click

from kdgpsim import commands


def load_config(config_object):
    """Collect the UPPERCASE names of a settings module (or module path) into a dict."""
    if isinstance(config_object, str):
        config_object = importlib.import_module(config_object)
    return {key: getattr(config_object, key) for key in dir(config_object) if key.isupper()}


def create_app(config_object="kdgpsim.settings"):
    """Create the command-line application.

    :param config_object: The configuration object to use.
    """
    config = load_config(config_object)
    app = click.Group(
        name="kdgpsim",
        help="Distributed Gaussian-process field estimation experiments.",
        context_settings={"obj": config},
    )
    register_commands(app)
    configure_logger(app, config.get("LOG_LEVEL", logging.INFO))
    return app


def register_commands(app):
    """Register Click commands."""
    app.add_command(commands.consensus_bench)
    app.add_command(commands.stationary)
    app.add_command(commands.dynamic)
    app.add_command(commands.kernel_approx)
    app.add_command(commands.test)
    app.add_command(commands.lint)


def configure_logger(app, level=logging.INFO):
    """Configure loggers."""
    logger = logging.getLogger(__name__.split(".")[0])
    logger.setLevel(level)
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stdout)
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)
    return logger
