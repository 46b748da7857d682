"""DoF simulator for the two-user, two-subband MISO broadcast channel with imperfect CSIT."""

from .channel_model import CsitQuality, SnrPoint, draw_channel, draw_channels
from .scheme_builder import Owner, Scheme, build_plan, sic_program_for

__version__ = "0.1.0"
