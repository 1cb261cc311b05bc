__version__ = "0.1.0"

__all__ = ["optimize_tfim", "set_validation"]

# Import accessors module to register accessors with pandas
import qaoa_qng.accessors  # noqa: F401

# Import public API functions
from qaoa_qng.api import optimize_tfim, set_validation
