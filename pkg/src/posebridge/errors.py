"""Exception types shared across the package.

Argument validation errors use plain ``ValueError`` throughout; the classes
here cover failure modes a caller may want to handle separately.
"""


class PoseBridgeError(Exception):
    """Base class for posebridge-specific failures."""


class NumericFailure(PoseBridgeError):
    """A numerical operation could not produce a usable result.

    Raised e.g. when training with ``regularization=0`` hits a singular
    system, or when a non-finite value reaches a computation that cannot
    tolerate it.
    """


class DegeneratePoseError(PoseBridgeError):
    """A pose puts some joint axis in an undefined configuration.

    ``bone_index`` identifies the offending bone in the schema's bone order.
    """

    def __init__(self, message, bone_index):
        super().__init__(message)
        self.bone_index = bone_index


class EngineInvalid(PoseBridgeError):
    """A projection engine is unusable (e.g. built over an empty store)."""
