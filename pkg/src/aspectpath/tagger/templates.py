"""Surface feature templates: words, POS tags, affixes, stems and capitalization in a +-2 window."""
from __future__ import annotations

from ..corpus import ParsedSentence

OFFSETS = (-2, -1, 0, 1, 2)
AFFIX_LENGTHS = (1, 2, 3, 4)
BOS, EOS = "__BOS__", "__EOS__"


def stem(word: str) -> str:
    """Strip one common inflectional suffix (-ies, -ing, -ed, -es, -s), keeping a stem of >= 3 chars."""
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("ing") and len(word) > 5:
        return word[:-3]
    if word.endswith("ed") and len(word) > 4:
        return word[:-2]
    if word.endswith(("sses", "xes", "ches", "shes", "zes")) and len(word) > 4:
        return word[:-2]
    if word.endswith("s") and not word.endswith(("ss", "us", "is")) and len(word) > 3:
        return word[:-1]
    return word


def _token_templates(form: str, raw: str, pos: str) -> list[tuple[str, str]]:
    feats = [("w", form), ("t", pos)]
    feats += [(f"pre{n}", form[:n]) for n in AFFIX_LENGTHS]
    feats += [(f"suf{n}", form[-n:]) for n in AFFIX_LENGTHS]
    feats.append(("stem", stem(form)))
    feats.append(("cap", "true" if raw[:1].isupper() else "false"))
    return feats


_NAMES = [name for name, _ in _token_templates("x", "x", "X")]


def baseline_templates(sentence: ParsedSentence) -> list[list[str]]:
    """``name[offset]=value`` strings for every token; out-of-range offsets give BOS/EOS values."""
    n = len(sentence)
    per_token = [_token_templates(t.form, t.surface, t.pos) for t in sentence.tokens]
    out = []
    for i in range(n):
        feats = []
        for k in OFFSETS:
            j = i + k
            if 0 <= j < n:
                feats.extend(f"{name}[{k}]={value}" for name, value in per_token[j])
            else:
                edge = BOS if j < 0 else EOS
                feats.extend(f"{name}[{k}]={edge}" for name in _NAMES)
        out.append(feats)
    return out
