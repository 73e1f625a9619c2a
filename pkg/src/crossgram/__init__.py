"""Multilingual word embeddings trained jointly in one shared space.

Monolingual corpora contribute skip-gram objectives; sentence-aligned
bitext ties every non-pivot language to a pivot language by treating each
word of an aligned sentence as a context word for the other side. Languages
never paired directly still land in comparable regions through the pivot.
"""

from .corpus import (AlignedCorpus, EmptyVocabularyError, MonoCorpus,
                     PackedSentences, Vocabulary, build_sampling_table,
                     build_vocab, discard_probability, encode_bitext,
                     encode_corpus, tokenize)
from .model import (EmbeddingFormatError, EmbeddingSet, MultilingualModel,
                    WordSpace, init_model, load_embeddings, save_embeddings,
                    write_word_vectors)
from .trainer import (ConfigurationError, MissingBitextError, TrainingConfig,
                      TrainProgress, lr_at, pair_loss, pair_step, train)

__version__ = "0.1.0"

__all__ = [
    "AlignedCorpus",
    "ConfigurationError",
    "EmbeddingFormatError",
    "EmbeddingSet",
    "EmptyVocabularyError",
    "MissingBitextError",
    "MonoCorpus",
    "MultilingualModel",
    "PackedSentences",
    "TrainProgress",
    "TrainingConfig",
    "Vocabulary",
    "WordSpace",
    "build_sampling_table",
    "build_vocab",
    "discard_probability",
    "encode_bitext",
    "encode_corpus",
    "init_model",
    "load_embeddings",
    "lr_at",
    "pair_loss",
    "pair_step",
    "save_embeddings",
    "tokenize",
    "train",
    "write_word_vectors",
]
