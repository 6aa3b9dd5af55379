"""Decoding and detection probabilities in a large full-duplex ISAC cellular network.

Two engines: ``analysis`` evaluates the Laplace-transform expressions by
quadrature, ``netsim`` estimates the same events by simulating the network.
"""
from .params import (FadingConstants, NetworkParams, ParamError, Scenario, db_to_linear,
                     default_scenario, fading_constants, load_config, validate)

__version__ = "0.1.0"
