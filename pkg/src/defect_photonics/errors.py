"""Exception hierarchy.

Two families map onto the CLI exit-code contract: :class:`InputError`
(exit 2) for anything wrong with the data handed in, and
:class:`PhysicsError` (exit 3) for inputs that parse fine but describe an
infeasible or ill-posed calculation.
"""


class DefectPhotonicsError(Exception):
    """Base class for every error raised by this package."""


class InputError(DefectPhotonicsError, ValueError):
    exit_code = 2


class PhysicsError(DefectPhotonicsError, ValueError):
    exit_code = 3


class ParseError(InputError):
    """Malformed text. ``line`` is 1-based when known."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"line {line}:"
        super().__init__(f"{where} {message}" if where else message)


class UnknownElement(ParseError):
    pass


class CountMismatch(ParseError):
    pass


class NonOrthonormal(InputError):
    def __init__(self, pair, inner_product):
        self.pair = pair
        self.inner_product = inner_product
        j, k = pair
        super().__init__(
            f"eigenvectors {j} and {k} are not orthonormal: <e_{j}, e_{k}> = {inner_product:.3e}"
        )


class NegativeFrequency(ParseError):
    pass


class DuplicateCharge(ParseError):
    pass


class EmptyTable(InputError):
    pass


class RaggedRows(InputError):
    pass


class ConfigError(InputError):
    pass


class SizeMismatch(InputError):
    pass


class SpeciesMismatch(InputError):
    pass


class UnalignedInput(InputError):
    pass


class InvalidStructure(InputError):
    pass


class EqualCharges(PhysicsError):
    pass


class InvalidHost(PhysicsError):
    pass


class FermiOutOfGap(PhysicsError):
    pass


class TooFewRecords(PhysicsError):
    pass


class NegativeRho(PhysicsError):
    pass


class InfeasibleFit(PhysicsError):
    pass


class InfeasibleModel(PhysicsError):
    pass


class InvalidGrid(PhysicsError):
    pass


class NyquistViolation(PhysicsError):
    pass


class NonPositiveZPL(PhysicsError):
    pass


class NegativeHR(PhysicsError):
    pass


class TooManyModes(PhysicsError):
    pass


class TruncationTooCoarse(PhysicsError):
    pass
