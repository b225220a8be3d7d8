"""Exception types shared across the package."""


class EvalancheError(Exception):
    """Base class for all library errors."""


class DomainError(EvalancheError):
    """An argument is outside the operation's domain (empty input, bad index,
    non-finite observation, invalid weights, ...)."""


class NumericalError(EvalancheError):
    """A linear-scale computation overflowed or cancelled catastrophically."""


class AsymmetricPolynomialError(DomainError):
    """Raised by decompose_symmetric on an asymmetric polynomial.

    Carries the first witnessing pair of equal-size variable subsets whose
    coefficients differ.
    """

    def __init__(self, subset_a: tuple[int, ...], subset_b: tuple[int, ...],
                 coeff_a: float, coeff_b: float) -> None:
        self.subset_a = subset_a
        self.subset_b = subset_b
        self.coeff_a = coeff_a
        self.coeff_b = coeff_b
        super().__init__(
            f"asymmetric polynomial: coefficient of {set(subset_a) or '{}'} is "
            f"{coeff_a!r} but coefficient of {set(subset_b) or '{}'} is {coeff_b!r}"
        )
