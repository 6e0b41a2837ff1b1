class FormatError(ValueError):
    """Malformed binary or text file. Carries the byte offset of the defect."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DimensionMismatch(ValueError):
    """Inputs whose declared sizes disagree (image vs intrinsics vs grid)."""
