"""Regenerate the bundled English mini-corpus under data/.

Noun, verb and adjective lemmas come from lemminflect's inflection table;
token counts follow wordfreq's Zipf values. Documents are synthetic: each
occurrence of a lemma is assigned to a document, a small share of lemmas is
concentrated in one or two documents (jargon), and distractor tokens
(proper nouns, acronyms, digits, punctuation, foreign words) are mixed in so
every acceptance filter has something to reject.

    pip install lemminflect wordfreq
    python3 scripts/make_minicorpus.py
"""

import gzip
import os
import random

import lemminflect
import wordfreq

SEED = 20230501
N_DOCS = 300
N_NOUNS = 4800
OUT = os.path.join(os.path.dirname(__file__), "..", "data")

rng = random.Random(SEED)
table = os.path.join(os.path.dirname(lemminflect.__file__), "resources", "infl_lu.csv.gz")

nouns, verbs, adjs, propns, words = {}, [], [], [], set()
with gzip.open(table, "rt", encoding="utf-8") as fh:
    for line in fh:
        lemma, kind, forms = line.rstrip("\n").split(",", 2)
        if not lemma.isascii() or not lemma.isalpha():
            continue
        if lemma[0].isupper():
            if kind == "noun" and lemma[1:].islower() and len(lemma) > 2:
                propns.append(lemma)
            continue
        words.add(lemma)
        if kind == "noun":
            nouns[lemma] = [f for f in forms.split("/") if f.isalpha()]
        elif kind == "verb":
            verbs.append(lemma)
        elif kind == "adj":
            adjs.append(lemma)

# Keep nouns that wordfreq knows, stratified so rare nouns are well represented.
scored = [(w, wordfreq.zipf_frequency(w, "en")) for w in sorted(nouns) if len(w) >= 3]
scored = [(w, z) for w, z in scored if 1.5 <= z <= 6.0]
bands = {}
for w, z in scored:
    bands.setdefault(int(z * 2), []).append((w, z))
chosen = {}
per_band = N_NOUNS // len(bands) + 1
for key in sorted(bands):
    pool = bands[key]
    rng.shuffle(pool)
    for w, z in pool[:per_band]:
        chosen[w] = z
for must in ("carrion", "snow", "ball", "dog", "fashion", "washing"):
    chosen[must] = wordfreq.zipf_frequency(must, "en")
chosen.pop("washioneer", None)

docs = [[] for _ in range(N_DOCS)]


def place(surface, lemma, upos, doc):
    docs[doc].append((surface, lemma, upos))


for lemma, z in sorted(chosen.items()):
    count = max(1, round(10 ** ((z - 2.0) * 0.6)))
    forms = nouns.get(lemma) or [lemma]
    jargon = rng.random() < 0.05
    home = [rng.randrange(N_DOCS) for _ in range(2)]
    for _ in range(count):
        doc = rng.choice(home) if jargon else rng.randrange(N_DOCS)
        surface = rng.choice(forms) if rng.random() < 0.3 else lemma
        if rng.random() < 0.1:
            surface = surface.capitalize()
        place(surface, lemma, "NOUN", doc)

for lemma in rng.sample(verbs, 600):
    for _ in range(rng.randint(1, 8)):
        place(lemma, lemma, "VERB", rng.randrange(N_DOCS))
for lemma in rng.sample(adjs, 400):
    for _ in range(rng.randint(1, 6)):
        place(lemma, lemma, "ADJ", rng.randrange(N_DOCS))
for lemma in rng.sample(propns, 300) + ["Eli", "Abbott"]:
    for _ in range(rng.randint(1, 5)):
        place(lemma, lemma, "PROPN", rng.randrange(N_DOCS))
distractors = [
    ("NASA", "NASA"), ("UNESCO", "UNESCO"), ("DNA", "DNA"), ("co2", "co2"),
    ("mp3", "mp3"), ("e-mail", "e-mail"), ("x", "x"), ("fasanerie", "fasanerie"),
    ("sciocchezza", "sciocchezza"), ("envasement", "envasement"), ("demonio", "demonio"),
    ("figuuri", "figuuri"), ("verrechtsing", "verrechtsing"),
]
for surface, lemma in distractors:
    for _ in range(rng.randint(2, 6)):
        place(surface, lemma, "NOUN", rng.randrange(N_DOCS))
for doc in range(N_DOCS):
    for _ in range(rng.randint(5, 15)):
        place(".", ".", "PUNCT", doc)
        place("the", "the", "DET", doc)

with open(os.path.join(OUT, "en.minicorpus.tsv"), "w", encoding="utf-8") as out:
    out.write("# doc_id\tsurface\tlemma\tupos\n")
    for i, toks in enumerate(docs):
        rng.shuffle(toks)
        for surface, lemma, upos in toks:
            out.write(f"d{i:03d}\t{surface}\t{lemma}\t{upos}\n")

with open(os.path.join(OUT, "en.words.txt"), "w", encoding="utf-8") as out:
    for w in sorted(words - {"washioneer"}):
        out.write(w + "\n")

# Reference items standing in for a published vocabulary test: rare nouns.
rare = sorted(w for w, z in chosen.items() if 2.2 <= z <= 2.9)
with open(os.path.join(OUT, "en.reference.txt"), "w", encoding="utf-8") as out:
    for w in sorted(rng.sample(rare, 40)):
        out.write(w + "\n")
