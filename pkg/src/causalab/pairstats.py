"""Backend selection for the pairwise product-spectrum kernels.

The compiled extension is preferred when present; otherwise the pure NumPy
twin is used.  `BACKEND` records which one won so run manifests can say.
"""

try:
    from . import _pairkern as _impl
except ImportError:  # extension not built on this install
    from . import _pairstats_py as _impl

BACKEND: str = _impl.BACKEND_NAME

product_spectra_block = _impl.product_spectra_block
action_sums = _impl.action_sums


def numpy_backend():
    """The fallback module, kept importable for benchmarks and cross-checks."""
    from . import _pairstats_py
    return _pairstats_py
