class InputError(ValueError):
    """Rejected input: malformed file, bad record, unknown tag, shape mismatch."""

    def __init__(self, message, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        where = ""
        if path is not None:
            where = f"{path}"
            if lineno is not None:
                where += f":{lineno}"
            where += ": "
        elif lineno is not None:
            where = f"line {lineno}: "
        super().__init__(where + message)


class InvariantError(RuntimeError):
    """An internal consistency check failed."""


class ShapeError(InvariantError, ValueError):
    """Operand shapes are incompatible for a tensor op."""

    def __init__(self, op, *shapes):
        self.op = op
        self.shapes = shapes
        listed = ", ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{op}: incompatible shapes {listed}")
