# -*- coding: utf-8 -*-
"""Exceptions raised by the simulator."""


class KdgpError(Exception):
    """Base class for every error raised by kdgpsim."""


class InvalidArgumentError(KdgpError, ValueError):
    """An argument violates the operation's precondition."""


class OutOfDomainError(InvalidArgumentError):
    """A point lies outside the box on which the Hilbert basis is defined."""


class NumericalFailureError(KdgpError, ArithmeticError):
    """A factorization failed or a quantity lost positive definiteness."""


class ConfigurationError(KdgpError):
    """An experiment configuration cannot be realised."""
