"""motionchat: desk-scale multimodal (motion + speech) character chat stack."""

__version__ = "0.1.0"
DATA_FORMAT_VERSION = "1"
