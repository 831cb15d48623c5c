"""Warning and error categories with stable machine-readable codes."""


class NumericalWarning(UserWarning):
    code = "W000"


class NearDegenerateWarning(NumericalWarning):
    code = "W101"


class RootCollisionWarning(NumericalWarning):
    code = "W201"


class GridResonanceWarning(NumericalWarning):
    code = "W301"


class TruncationWarning(NumericalWarning):
    code = "W401"


class IllConditionedError(ArithmeticError):
    code = "E101"


class PoleProximityError(ArithmeticError):
    code = "E102"


class BoundaryZeroError(ArithmeticError):
    code = "E201"


class WindingError(ArithmeticError):
    code = "E202"


class HorizonError(ValueError):
    code = "E301"


class QuadratureError(ArithmeticError):
    code = "E401"
