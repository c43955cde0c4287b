"""model_service: trainable intent classifier behind the wire protocol."""

__version__ = "0.1.0"

LABEL_MAP = {"Release": 0, "Reuse": 1, "Reference": 2, "Nothing": 3}
LABEL_NAMES = ["Release", "Reuse", "Reference", "Nothing"]
NUM_LABELS = len(LABEL_NAMES)
