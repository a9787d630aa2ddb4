"""Exception types shared across the package.

Budget overruns are first-class events: samplers raise instead of silently
resampling, and estimation code is expected to catch them and keep a
truncation tally.
"""


class HalfmapError(Exception):
    pass


class CapExceeded(HalfmapError):
    """A sampler hit its node or step cap. The replicate must be discarded
    and counted in a truncation tally, never silently resampled."""

    def __init__(self, cap, what="nodes"):
        super().__init__(f"cap exceeded: {cap} {what}")
        self.cap = cap
        self.what = what


class NoConvergence(HalfmapError):
    """An iterative solver failed to reach its residual target."""

    def __init__(self, residual, iterations):
        super().__init__(
            f"no convergence: residual {residual:.3e} after {iterations} iterations"
        )
        self.residual = residual
        self.iterations = iterations


class Unresolved(HalfmapError):
    """A corner or boundary query cannot be answered inside the current
    window; the caller should extend the window to the right."""

    def __init__(self, pending=None):
        super().__init__(f"unresolved within window: {pending}")
        self.pending = pending


class NoAnchor(Unresolved):
    """No label-0 corner on the nonnegative side of the window yet."""

    def __init__(self):
        Exception.__init__(self, "no anchor corner with label 0 in window")
        self.pending = "anchor"


class BudgetExceeded(HalfmapError):
    """Aggregate truncation fraction exceeded the configured ceiling."""

    def __init__(self, fraction, ceiling):
        super().__init__(
            f"truncation fraction {fraction:.4f} exceeds ceiling {ceiling:.4f}"
        )
        self.fraction = fraction
        self.ceiling = ceiling
