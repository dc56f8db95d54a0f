"""smtkit: a small phrase-based statistical machine translation toolkit.

Subpackages cover the classic text-side pipeline: corpus preparation,
n-gram language models, word alignment and symmetrization, phrase table
and reordering model training, stack decoding, MT evaluation metrics, an
experiment runner, and a pivot-routing translation relay service.
"""

__version__ = "0.1.0"
