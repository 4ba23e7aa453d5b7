"""Rule-based token annotator: universal POS tags plus dependency labels.

A lightweight stand-in for a statistical parser, used when spacy is not
installable. Tags come from the universal POS inventory and the classic
dependency label set (aux, nsubj, amod, dobj, prep, pobj, ROOT, compound,
conj, ccomp, ...). Output is a deterministic pure function of the token
sequence; it is not a linguistically faithful parse, but it produces the
standard inventories with realistic relative frequencies.
"""

from __future__ import annotations

import string

DETERMINERS = {
    "the", "a", "an", "this", "that", "these", "those", "each", "every",
    "no", "any", "some", "all", "both",
}
ADPOSITIONS = {
    "of", "in", "on", "at", "by", "for", "with", "from", "about", "into",
    "over", "under", "between", "against", "during", "through", "towards",
    "upon", "within", "without",
}
AUXILIARIES = {
    "is", "are", "was", "were", "be", "been", "being", "am",
    "do", "does", "did", "have", "has", "had",
    "will", "would", "can", "could", "shall", "should", "may", "might", "must",
}
PRONOUNS = {
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us",
    "them", "who", "what", "which", "anyone", "everyone", "someone",
}
CCONJ = {"and", "or", "but", "nor", "yet"}
SCONJ = {"because", "although", "though", "while", "if", "when", "since",
         "unless", "whereas", "as"}
PARTICLES = {"to", "not", "n't"}
COMMON_ADVERBS = {
    "very", "also", "however", "often", "never", "always", "sometimes",
    "still", "already", "just", "too", "rather", "quite", "so", "then",
    "clearly", "truly", "indeed", "surely", "mostly",
}
COMMON_ADJECTIVES = {
    "good", "better", "best", "bad", "worse", "worst", "many", "few",
    "much", "more", "most", "less", "least", "important", "high", "low",
    "large", "small", "new", "old", "same", "other", "own", "free",
}
VERB_SUFFIXES = ("ize", "ise", "ify")
# (suffix, minimum token length) — short nouns like "table" must not match
ADJ_SUFFIXES = (("ous", 5), ("ful", 5), ("ive", 5), ("able", 7), ("ible", 7), ("less", 6))
NOUN_ING = {"being", "thing", "something", "anything", "everything", "nothing",
            "morning", "evening", "building", "king", "ring", "string"}


def _is_punct(token: str) -> bool:
    return bool(token) and all(ch in string.punctuation for ch in token)


def pos_tag(token: str, index: int) -> str:
    low = token.lower()
    if low == "[sep]":
        return "SYM"
    if _is_punct(token):
        return "PUNCT"
    if low.replace(",", "").replace(".", "").isdigit():
        return "NUM"
    if low in DETERMINERS:
        return "DET"
    if low in AUXILIARIES:
        return "AUX"
    if low in ADPOSITIONS:
        return "ADP"
    if low in PRONOUNS:
        return "PRON"
    if low in CCONJ:
        return "CCONJ"
    if low in SCONJ:
        return "SCONJ"
    if low in PARTICLES:
        return "PART"
    if low in COMMON_ADVERBS or (low.endswith("ly") and len(low) > 3):
        return "ADV"
    if low in COMMON_ADJECTIVES or any(
        low.endswith(sfx) and len(low) >= min_len for sfx, min_len in ADJ_SUFFIXES
    ):
        return "ADJ"
    if (low.endswith("ing") and low not in NOUN_ING and len(low) > 4) or (
        low.endswith("ed") and len(low) > 3
    ):
        return "VERB"
    if low.endswith(VERB_SUFFIXES) and len(low) > 4:
        return "VERB"
    if token[:1].isupper() and index > 0:
        return "PROPN"
    return "NOUN"


_NOMINAL = {"NOUN", "PROPN", "PRON", "NUM"}


def annotate_tokens(tokens: list[str]) -> list[tuple[str, str, str]]:
    """(surface, upos, deprel) triples for one whitespace-tokenized sentence.

    Raises ValueError on an empty sentence (callers treat that as a parser
    failure and skip the sentence).
    """
    if not tokens:
        raise ValueError("cannot annotate an empty sentence")
    tags = [pos_tag(tok, i) for i, tok in enumerate(tokens)]

    # Root: the first finite VERB, else the first AUX, else the first nominal,
    # else the first token.
    root = next((i for i, t in enumerate(tags) if t == "VERB"), None)
    if root is None:
        root = next((i for i, t in enumerate(tags) if t == "AUX"), None)
    if root is None:
        root = next((i for i, t in enumerate(tags) if t in _NOMINAL), 0)

    deps = ["dep"] * len(tokens)
    seen_root_verb = False
    last_adp: int | None = None
    subject_taken = False
    for i, tag in enumerate(tags):
        if i == root:
            deps[i] = "ROOT"
            seen_root_verb = True
            last_adp = None
            continue
        nxt = tags[i + 1] if i + 1 < len(tags) else None
        if tag == "PUNCT" or tag == "SYM":
            deps[i] = "punct"
        elif tag == "DET":
            deps[i] = "det"
        elif tag == "ADJ":
            deps[i] = "amod"
        elif tag == "ADV":
            deps[i] = "advmod"
        elif tag == "AUX":
            deps[i] = "aux"
        elif tag == "ADP":
            deps[i] = "prep"
            last_adp = i
        elif tag == "CCONJ":
            deps[i] = "cc"
        elif tag == "SCONJ":
            deps[i] = "mark"
        elif tag == "PART":
            deps[i] = "aux" if tokens[i].lower() == "to" else "neg"
        elif tag == "NUM":
            deps[i] = "nummod"
        elif tag in _NOMINAL:
            if last_adp is not None:
                deps[i] = "pobj"
                last_adp = None
            elif nxt in _NOMINAL:
                deps[i] = "compound"
            elif i > 0 and tags[i - 1] == "CCONJ":
                deps[i] = "conj"
            elif not seen_root_verb and not subject_taken:
                deps[i] = "nsubj"
                subject_taken = True
            elif seen_root_verb:
                deps[i] = "dobj"
            else:
                deps[i] = "nsubj" if not subject_taken else "dobj"
        elif tag == "VERB":
            deps[i] = "conj" if i > 0 and tags[i - 1] == "CCONJ" else "ccomp"
        else:
            deps[i] = "dep"
    return [(tok, tags[i], deps[i]) for i, tok in enumerate(tokens)]


def annotate_text(text: str) -> list[tuple[str, str, str]]:
    return annotate_tokens(text.split())
