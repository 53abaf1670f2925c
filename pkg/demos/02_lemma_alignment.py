"""Aligning a lemmatized document to its raw surface text.

Target terms come as lemmas, but masked contexts must be extracted from
the raw text, so each lemma position needs its raw counterpart. The
cascade anchors unique exact matches, fills the gaps with a Levenshtein
edit alignment, and PADs whatever has no counterpart.
"""

from driftscope.align import AlignmentConfig, build_alignment, filter_aligned_tokens

raw = "The planes were flying low , and the pilots ignored the storm .".split()
lemma = "the plane be fly low , and the pilot ignore the storm .".split()

amap = build_alignment("example", raw, lemma)
print("lemma token        -> raw token")
for j, token in enumerate(lemma):
    target = amap.lemma_to_raw[j]
    shown = raw[target] if target is not None else "(PAD)"
    print(f"  {token:<16} -> {shown}")
print(f"\naligned: {amap.aligned_fraction:.0%} of lemma positions "
      "(punctuation maps to PAD by construction)")

# Surface forms gathered for one lemma across a corpus are then filtered:
# too-short forms, sub-threshold shares, and first-letter mismatches are
# treated as alignment noise.
forms = {"walked": 520, "walking": 310, "walks": 90, "ambled": 7, "w": 3}
config = AlignmentConfig()
accepted = filter_aligned_tokens("walk", forms, config)
print("\nsurface forms counted for lemma 'walk':")
for form, count in sorted(forms.items(), key=lambda kv: -kv[1]):
    verdict = "keep" if form in accepted else "drop"
    print(f"  {form:<10} count={count:<4} -> {verdict}")

# A Latin-style exception lets 'iubeo' accept forms spelled with 'j'.
latin = AlignmentConfig(first_letter_exceptions=(("i", "j"),))
print("\n'iubeo' with the i->j exception accepts 'jubeo':",
      filter_aligned_tokens("iubeo", {"jubeo": 40, "iubeo": 60}, latin))
