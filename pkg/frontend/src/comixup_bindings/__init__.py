"""Embedding interface for driving the batch mixing engine from a training loop.

A single entry point wraps the whole optimize-and-mix pipeline so a data
loader can call it per minibatch without touching files or subprocesses:

    outputs, soft_labels, labeling = comix(inputs, saliency, labels,
                                           config={"tau": 0.9}, seed=step)

Results are numerically identical to the `comix mix` command run on the
same serialized tensors and seed.
"""

from .binding import ForeignBatchView, comix

__version__ = "0.1.0"

__all__ = ["ForeignBatchView", "comix", "__version__"]
