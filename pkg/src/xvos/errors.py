"""Exception types shared across the package.

ContractError covers violated preconditions / invalid configuration (CLI exit
code 1); plain OSError and friends are left to signal I/O trouble (exit 2).
"""


class ContractError(ValueError):
    """A documented precondition or configuration contract was violated."""


class ShapeError(ContractError):
    """Operands have incompatible shapes. Message names the op and the dims."""

    def __init__(self, op, detail):
        super().__init__(f"{op}: {detail}")
        self.op = op


class NonFiniteError(ContractError):
    """An op produced NaN/Inf from finite inputs."""

    def __init__(self, op):
        super().__init__(f"{op}: non-finite values in output")
        self.op = op
