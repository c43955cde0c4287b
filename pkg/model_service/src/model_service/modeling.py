"""Base model resolution: builtin tiny recipe, local paths, or hub ids.

"builtin:tiny" constructs a small randomly initialized BERT classifier
(seeded, so construction is reproducible) plus a WordPiece tokenizer
trained on the task texts. It exists so training and serving work on an
air-gapped CPU box; any local save_pretrained directory or downloadable
hub id can be used instead.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import torch
from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, trainers
from transformers import AutoModelForSequenceClassification, AutoTokenizer, BertConfig, BertForSequenceClassification

from . import NUM_LABELS

BUILTIN_TINY = "builtin:tiny"

PAD, UNK, CLS, SEP, MASK = "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"

TINY_DEFAULTS = dict(vocab_size=2000, hidden_size=64, layers=2, heads=2, max_positions=520)


class ModelResolutionError(RuntimeError):
    pass


def train_wordpiece(texts: Sequence[str], vocab_size: int = 2000) -> Tokenizer:
    tokenizer = Tokenizer(models.WordPiece(unk_token=UNK))
    tokenizer.normalizer = normalizers.Sequence(
        [normalizers.NFD(), normalizers.Lowercase(), normalizers.StripAccents()]
    )
    tokenizer.pre_tokenizer = pre_tokenizers.Whitespace()
    trainer = trainers.WordPieceTrainer(
        vocab_size=vocab_size, special_tokens=[PAD, UNK, CLS, SEP, MASK]
    )
    tokenizer.train_from_iterator(sorted(set(texts)), trainer)
    return tokenizer


def build_tiny(texts: Sequence[str], seed: int) -> tuple[BertForSequenceClassification, Tokenizer]:
    if not texts:
        raise ModelResolutionError("builtin:tiny needs training texts to fit its tokenizer")
    tokenizer = train_wordpiece(texts, TINY_DEFAULTS["vocab_size"])
    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=tokenizer.get_vocab_size(),
        hidden_size=TINY_DEFAULTS["hidden_size"],
        num_hidden_layers=TINY_DEFAULTS["layers"],
        num_attention_heads=TINY_DEFAULTS["heads"],
        intermediate_size=TINY_DEFAULTS["hidden_size"] * 4,
        max_position_embeddings=TINY_DEFAULTS["max_positions"],
        num_labels=NUM_LABELS,
        pad_token_id=tokenizer.token_to_id(PAD),
    )
    model = BertForSequenceClassification(config)
    return model, tokenizer


def resolve_base(base_model_id: str, texts: Sequence[str], seed: int):
    """Returns (model, raw tokenizers.Tokenizer) for the requested base."""
    if base_model_id == BUILTIN_TINY:
        return build_tiny(texts, seed)
    path = Path(base_model_id)
    if path.is_dir():
        model = AutoModelForSequenceClassification.from_pretrained(
            str(path), num_labels=NUM_LABELS
        )
        tokenizer_file = path / "tokenizer.json"
        if tokenizer_file.exists():
            return model, Tokenizer.from_file(str(tokenizer_file))
        hf_tokenizer = AutoTokenizer.from_pretrained(str(path))
        return model, hf_tokenizer.backend_tokenizer
    try:
        model = AutoModelForSequenceClassification.from_pretrained(
            base_model_id, num_labels=NUM_LABELS
        )
        hf_tokenizer = AutoTokenizer.from_pretrained(base_model_id)
    except Exception as exc:
        raise ModelResolutionError(
            f"cannot resolve base model {base_model_id!r}: {exc}"
        ) from exc
    return model, hf_tokenizer.backend_tokenizer
