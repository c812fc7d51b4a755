"""Brute-force reference for the 11 rule-based signals.

Written from the signal definitions alone (Python stdlib: unicodedata + re),
so it shares no code with the C++ implementation. Regenerate the golden file
with:

    python3 tests/oracles/signals_oracle.py > tests/data/signals_golden.jsonl
"""
import json
import math
import random
import re
import sys
import unicodedata

# Unicode White_Space property, listed explicitly.
WHITE_SPACE = set(
    [chr(c) for c in range(0x09, 0x0E)]
    + ["\x20", "\x85", "\xa0", "\u1680"]
    + [chr(c) for c in range(0x2000, 0x200B)]
    + ["\u2028", "\u2029", "\u202f", "\u205f", "\u3000"]
)

SENTENCE = re.compile(r"\b[^.!?]+[.!?]*")


def cat(c):
    return unicodedata.category(c)


def normalize(text):
    s = unicodedata.normalize("NFC", text).lower()
    return "".join(c for c in s if not cat(c).startswith("P"))


def words_of(text):
    out, cur = [], []
    for c in normalize(text):
        if c in WHITE_SPACE:
            if cur:
                out.append("".join(cur))
                cur = []
        else:
            cur.append(c)
    if cur:
        out.append("".join(cur))
    return out


def top_ngram(words, n):
    if len(words) < n:
        return 0.0
    total = sum(len(w) for w in words)
    if total == 0:
        return 0.0
    grams = [tuple(words[i:i + n]) for i in range(len(words) - n + 1)]
    best, best_count = None, 0
    for g in grams:  # first gram reaching the maximum wins
        c = grams.count(g)
        if c > best_count:
            best, best_count = g, c
    return min(1.0, max(0.0, best_count * sum(len(w) for w in best) / total))


def lines_of(text):
    if text == "":
        return []
    parts = text.split("\n")
    if text.endswith("\n"):
        parts.pop()
    return parts


def signals(text):
    words = words_of(text)
    n = len(words)
    out = {}
    if n:
        out["doc_frac_no_alph_words"] = sum(1 for w in words if not any(cat(c).startswith("L") for c in w)) / n
        out["doc_mean_word_length"] = sum(len(w) for w in words) / n
        out["doc_frac_unique_words"] = len(set(words)) / n
        entropy = 0.0
        seen = []
        for w in words:
            if w in seen:
                continue
            seen.append(w)
            p = words.count(w) / n
            entropy -= p * math.log(p)
        out["doc_unigram_entropy"] = entropy
    else:
        for k in ("doc_frac_no_alph_words", "doc_mean_word_length", "doc_frac_unique_words", "doc_unigram_entropy"):
            out[k] = 0.0
    out["doc_word_count"] = float(n)

    lines = lines_of(text)
    term = num = upper = 0.0
    for line in lines:
        stripped = line
        while stripped and stripped[-1] in WHITE_SPACE:
            stripped = stripped[:-1]
        if stripped and stripped[-1] in '.!?"':
            term += 1
        if line:
            upper += sum(1 for c in line if cat(c) == "Lu") / len(line)
        norm = normalize(line)
        if norm:
            num += sum(1 for c in norm if cat(c) == "Nd") / len(norm)
    k = len(lines)
    out["lines_ending_with_terminal_punctution_mark"] = term / k if k else 0.0
    out["lines_numerical_chars_fraction"] = num / k if k else 0.0
    out["lines_uppercase_letter_fraction"] = upper / k if k else 0.0
    out["doc_num_sentences"] = float(len(SENTENCE.findall(text)))
    out["doc_frac_chars_top_2gram"] = top_ngram(words, 2)
    out["doc_frac_chars_top_3gram"] = top_ngram(words, 3)
    return out


PIECES = [
    "The quick brown fox jumps over the lazy dog.",
    "Hello, World!",
    "Is this the real life? Is this just fantasy?",
    "He said \"stop\"",
    "Prices rose 12.5% in 2023, up from 3.1%",
    "Über straße Größe ÄÖÜ groß",
    "Ça va? Très bien, merci.",
    "été café",
    "Привет, мир! Как дела?",
    "ΑΘΗΝΑ Ελλάδα καλημέρα.",
    "数据选择很重要。模型训练需要高质量数据",
    "東京は日本の首都です",
    "مرحبا بالعالم",
    "नमस्ते दुनिया १२३",
    "١٢٣ ٤٥٦",
    "emoji 🙂 test 🚀🚀",
    "snake_case and CamelCase_42",
    "...!!!???",
    "a a a a a a",
    "ab cd ab cd ef",
    "x y z",
    "tab\tseparated\tvalues",
    "İstanbul DŽungla ǅemal",
    "(parenthetical) [bracketed] {braced} — dash – en",
    "«guillemets» ¿qué? ¡sí!",
    "line with trailing spaces.   ",
    "ALL CAPS SHOUTING HERE",
    "123 456 789",
    "mixed123abc 4you 2day",
    "Ⅻ roman ½ half ² sup",
]


def make_doc(rng):
    parts = []
    for _ in range(rng.randint(0, 8)):
        parts.append(rng.choice(PIECES))
        parts.append(rng.choice([" ", " ", "\n", "\n\n", "  ", "\r\n", ""]))
    if rng.random() < 0.1:
        parts.append("\n")
    return "".join(parts)


def main():
    rng = random.Random(20240601)
    docs = [""] + PIECES + [make_doc(rng) for _ in range(200 - 1 - len(PIECES))]
    for text in docs:
        sys.stdout.write(json.dumps({"text": text, "expected": signals(text)}, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
