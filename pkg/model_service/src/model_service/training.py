"""Fine-tuning with early stopping and reloadable artifacts.

Each epoch ends with a weighted-F1 evaluation on the validation set; the
best checkpoint is kept, and training stops once the metric has not
improved for `patience` consecutive epochs (or max_epochs is reached).
The saved artifact carries the model, tokenizer, config snapshot, the
epoch-by-epoch trace, and validation metrics, and reloads to bitwise
identical predictions.
"""

from __future__ import annotations

import datetime
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import torch
from tokenizers import Tokenizer
from transformers import AutoModelForSequenceClassification

from . import LABEL_MAP, NUM_LABELS
from .data import LabeledText, weighted_f1
from .inference import Predictor
from .modeling import BUILTIN_TINY, resolve_base
from .truncation import TRUNCATION_METHODS, kept_indices

log = logging.getLogger(__name__)

ARTIFACT_FILE = "artifact.json"
TOKENIZER_FILE = "tokenizer.json"


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainingConfig:
    base_model_id: str = BUILTIN_TINY
    truncation_method: str = "tail"
    max_len: int = 512
    max_epochs: int = 60
    patience: int = 10
    seed: int = 20240301
    learning_rate: float = 3e-4
    batch_size: int = 16
    merge_train_test: bool = False
    label_map: dict = field(default_factory=lambda: dict(LABEL_MAP))

    def __post_init__(self) -> None:
        if self.truncation_method not in TRUNCATION_METHODS:
            raise TrainingError(f"unknown truncation method {self.truncation_method!r}")
        if self.label_map != LABEL_MAP:
            raise TrainingError(f"label_map must be exactly {LABEL_MAP}")
        if self.patience < 1 or self.max_epochs < 1:
            raise TrainingError("patience and max_epochs must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "TrainingConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise TrainingError(f"unknown training config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class ModelArtifact:
    model_id: str
    path: str
    metrics: dict
    config: dict
    trace: list[dict]
    created: str

    def load_predictor(self) -> Predictor:
        model = AutoModelForSequenceClassification.from_pretrained(self.path)
        tokenizer = Tokenizer.from_file(str(Path(self.path) / TOKENIZER_FILE))
        return Predictor(model, tokenizer)

    @classmethod
    def load(cls, path: str | Path) -> "ModelArtifact":
        with open(Path(path) / ARTIFACT_FILE, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        data["path"] = str(path)
        return cls(**data)


def _encode_dataset(predictor: Predictor, examples, config: TrainingConfig):
    encoded = [
        predictor.encode(e.text, config.truncation_method, config.max_len) for e in examples
    ]
    labels = [e.label for e in examples]
    return encoded, labels


def _batches(encoded, labels, batch_size, pad_id, generator=None):
    order = torch.randperm(len(encoded), generator=generator).tolist() if generator else range(len(encoded))
    order = list(order)
    for start in range(0, len(order), batch_size):
        rows = order[start : start + batch_size]
        chunk = [encoded[i] for i in rows]
        width = max(len(ids) for ids in chunk)
        input_ids = torch.full((len(chunk), width), pad_id, dtype=torch.long)
        attention = torch.zeros((len(chunk), width), dtype=torch.long)
        for r, ids in enumerate(chunk):
            input_ids[r, : len(ids)] = torch.tensor(ids, dtype=torch.long)
            attention[r, : len(ids)] = 1
        yield input_ids, attention, torch.tensor([labels[i] for i in rows], dtype=torch.long)


def train(
    train_set: Sequence[LabeledText],
    validation_set: Sequence[LabeledText],
    config: TrainingConfig,
    artifact_dir: str | Path,
    test_set: Sequence[LabeledText] | None = None,
) -> ModelArtifact:
    """Fine-tune the configured base model; returns the saved artifact.

    With merge_train_test set, the test split is folded into training
    (final-fit mode) and the held-out validation split still drives early
    stopping.
    """
    if config.merge_train_test and test_set:
        train_set = list(train_set) + list(test_set)
    if not train_set or not validation_set:
        raise TrainingError("training and validation sets must be non-empty")
    train_texts = {e.text for e in train_set}
    if any(e.text in train_texts for e in validation_set):
        raise TrainingError("validation set overlaps the training set")

    present = {e.label for e in train_set}
    for name, label in LABEL_MAP.items():
        if label not in present:
            log.warning("training set has no %r examples; proceeding", name)

    torch.manual_seed(config.seed)
    torch.set_num_threads(1)
    model, tokenizer = resolve_base(
        config.base_model_id, [e.text for e in train_set], config.seed
    )
    predictor = Predictor(model, tokenizer)
    encoded_train, labels_train = _encode_dataset(predictor, train_set, config)
    val_texts = [e.text for e in validation_set]
    val_labels = [e.label for e in validation_set]

    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)
    generator = torch.Generator().manual_seed(config.seed)

    best_f1 = -1.0
    best_epoch = -1
    best_state = None
    trace: list[dict] = []
    for epoch in range(config.max_epochs):
        model.train()
        epoch_loss = 0.0
        batches = 0
        for input_ids, attention, batch_labels in _batches(
            encoded_train, labels_train, config.batch_size, predictor._pad_id, generator
        ):
            optimizer.zero_grad()
            out = model(input_ids=input_ids, attention_mask=attention, labels=batch_labels)
            loss = out.loss
            if not math.isfinite(loss.item()):
                raise TrainingError(
                    f"non-finite loss {loss.item()} at epoch {epoch}; "
                    f"lr={config.learning_rate}, batch_size={config.batch_size}"
                )
            loss.backward()
            optimizer.step()
            epoch_loss += loss.item()
            batches += 1

        model.eval()
        predictions, _ = predictor.predict(
            val_texts, config.truncation_method, config.max_len
        )
        val_f1 = weighted_f1(val_labels, predictions)
        trace.append(
            {"epoch": epoch, "train_loss": epoch_loss / max(batches, 1), "val_f1": val_f1}
        )
        if val_f1 > best_f1:
            best_f1 = val_f1
            best_epoch = epoch
            best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
        log.info("epoch %d: loss %.4f, val F1 %.4f (best %.4f @ %d)",
                 epoch, epoch_loss / max(batches, 1), val_f1, best_f1, best_epoch)
        if epoch - best_epoch >= config.patience:
            log.info("early stopping: no improvement in %d epochs", config.patience)
            break

    if best_state is not None:
        model.load_state_dict(best_state)

    artifact_dir = Path(artifact_dir)
    artifact_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(artifact_dir)
    tokenizer.save(str(artifact_dir / TOKENIZER_FILE))
    metrics = {"val_f1": best_f1, "best_epoch": best_epoch, "epochs_run": len(trace)}
    created = datetime.datetime.now(datetime.timezone.utc).isoformat()
    model_id = f"{config.base_model_id}@{created}"
    payload = {
        "model_id": model_id,
        "metrics": metrics,
        "config": asdict(config),
        "trace": trace,
        "created": created,
    }
    with open(artifact_dir / ARTIFACT_FILE, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return ModelArtifact(path=str(artifact_dir), **payload)
