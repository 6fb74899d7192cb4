"""A desk-scale laboratory for generalized multimodal contrastive learning.

Submodules are imported explicitly (``from gcl_lab import losses``) and this
package root stays import-light on purpose: the command-line entry point must
be able to configure threading environment variables before numpy loads.
"""

__version__ = "0.1.0"
