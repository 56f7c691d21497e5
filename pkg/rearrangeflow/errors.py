from typing import Optional


class RearrangeError(Exception):
    """Base class for every error raised by rearrangeflow"""


class PositionOutOfBounds(RearrangeError):
    """A disc centre lies outside the inset configuration rectangle"""


PoseOutOfBounds = PositionOutOfBounds


class GenerationFailure(RearrangeError):
    """The rejection sampler ran out of attempts (over-dense request)"""


class ParseError(RearrangeError):
    """Malformed instance or solution file"""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class ValidationError(RearrangeError):
    """Well-formed input that violates a domain invariant"""


class ResolutionTooCoarse(RearrangeError):
    """Raster cell size above the r/4 floor"""


class UnmappedPose(RearrangeError):
    """Pose label not present in the region graph"""


class RealizationFailure(RearrangeError):
    """No cell path realizes a walk; indicates an adjacency bug"""


class DeadlineExceeded(RearrangeError):
    """A time limit ran out before the query was decided"""


class BufferOccupied(RearrangeError):
    """Perturbation buffer already holds an object"""


class KeyAbsent(RearrangeError):
    """Arrangement key not present in a search tree"""


class Infeasible(RearrangeError):
    """No solution exists within the searched bounds"""


class InputMismatch(RearrangeError):
    """Solution file does not belong to the instance file"""
