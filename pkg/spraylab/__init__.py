"""spraylab: left-invariant spray geometry on Lie groups, at the Lie-algebra level."""

__version__ = "0.1.0"
