"""Tokenization, tagging, chunking, topic signatures and keyphrase selection."""

from .chunker import Chunk, chunk_candidates
from .keyphrases import Keyphrase, WordVectors, extract_keyphrases
from .signatures import DEFAULT_LLR_THRESHOLD, TopicSignature, expand_terms, llr_statistic, topic_signatures
from .tagger import TAGSET, pos_tag, read_sidecar
from .tokenize import Sentence, Token, detokenize, is_content_word, is_word, split_sentences, tokenize

__all__ = [
    "Chunk",
    "DEFAULT_LLR_THRESHOLD",
    "Keyphrase",
    "Sentence",
    "TAGSET",
    "Token",
    "TopicSignature",
    "WordVectors",
    "chunk_candidates",
    "detokenize",
    "expand_terms",
    "extract_keyphrases",
    "is_content_word",
    "is_word",
    "llr_statistic",
    "pos_tag",
    "read_sidecar",
    "split_sentences",
    "tokenize",
    "topic_signatures",
]
