"""Segment feature flags, sonority classes and place of articulation.

PHOIBLE codes each segment with ternary distinctive features ('+', '-', '0') and
comma-joined sequences for contour segments (e.g. clicks are ``-,+``). A flag is
set only by an exact '+' or '-': contour and unspecified values leave it unset,
and ``has_flag`` treats unset as absent. Rows without any feature annotation fall
back to a small table keyed by the segment's IPA base letter.
"""

from __future__ import annotations

import unicodedata
from typing import Mapping

from .errors import FeatureLookupError

PHOIBLE_FEATURES = (
    "tone", "stress", "syllabic", "short", "long", "consonantal", "sonorant",
    "continuant", "delayedRelease", "approximant", "tap", "trill", "nasal",
    "lateral", "labial", "round", "labiodental", "coronal", "anterior",
    "distributed", "strident", "dorsal", "high", "low", "front", "back", "tense",
    "retractedTongueRoot", "advancedTongueRoot", "periodicGlottalSource",
    "epilaryngealSource", "spreadGlottis", "constrictedGlottis", "fortis",
    "raisedLarynxEjective", "loweredLarynxImplosive", "click",
)

# PHOIBLE column -> flag name
_PRIMITIVES = {
    "consonantal": "consonantal",
    "sonorant": "sonorant",
    "continuant": "continuant",
    "delayedRelease": "delayed_release",
    "approximant": "approximant",
    "tap": "tap",
    "trill": "trill",
    "nasal": "nasal",
    "lateral": "lateral",
    "labial": "labial",
    "round": "round",
    "coronal": "coronal",
    "dorsal": "dorsal",
    "front": "front",
    "back": "back",
    "long": "long",
    "periodicGlottalSource": "voiced",
    "epilaryngealSource": "epilaryngeal",
    "raisedLarynxEjective": "ejective",
    "loweredLarynxImplosive": "implosive",
    "click": "click",
}

UVULAR_LETTERS = frozenset("qɢχʁɴʀ")

# Modifier letters that never carry the segment's base articulation.
_MODIFIERS = frozenset("ʰʷʲˠˤˀʼːˑ˞ⁿˡᵑᵐᶬᵊ̃ʱʴʵʶ˭ʽ˂˃˄˅ʻʿʾ")

SONORITY = {"obstruent": 1, "nasal": 2, "liquid": 3, "glide": 4, "vowel": 5}
PLACES = ("labial", "coronal", "dorsal", "other")


def base_letter(ipa: str) -> str:
    """First letter of ``ipa`` that is neither a combining mark nor a modifier.

    Prenasalised and pre-aspirated segments (``ᵐb``, ``ʰt``) therefore map to
    the oral release.
    """
    for ch in ipa:
        if unicodedata.combining(ch) or ch in _MODIFIERS:
            continue
        return ch
    return ipa[:1]


def _fallback_table():
    table = {}

    def cons(letters, manner, place, voiced):
        for ch in letters:
            table[ch] = ("consonant", manner, place, voiced)

    cons("pʈcktq", "stop", None, False)
    cons("bdɖɟgɡɢ", "stop", None, True)
    cons("ʔʡ", "stop", "other", False)
    cons("mɱnɳɲŋɴ", "nasal", None, True)
    cons("ʙrʀ", "trill", None, True)
    cons("ⱱɾɽ", "tap", None, True)
    cons("ɸfθsʃʂçxχɕɬ", "fricative", None, False)
    cons("βvðzʒʐʝɣʁʑɮ", "fricative", None, True)
    cons("hħʜ", "fricative", "other", False)
    cons("ɦʕʢ", "fricative", "other", True)
    cons("ɹɻ", "liquid", None, True)
    cons("lɭʎʟɫ", "lateral", None, True)
    cons("jwɥɰʋ", "glide", None, True)
    cons("ʘǀǃǂǁ", "click", None, False)
    cons("ɓɗʄɠʛ", "implosive", None, True)

    places = {
        "labial": "pbmɱɸβfvʋʙⱱwɥʘɓ",
        "coronal": "tdʈɖnɳθðszʃʒʂʐɕʑɬɮrɾɽɹɻlɭɫǀǃǂǁɗ",
        "dorsal": "kgɡŋxɣcɟɲçʝjɰʎʟqɢɴχʁʀɠʄʛ",
    }
    for place, letters in places.items():
        for ch in letters:
            cls, manner, p, voiced = table[ch]
            table[ch] = (cls, manner, p or place, voiced)

    vowels = {
        # letter: (front, back, round)
        "i": (True, False, False), "y": (True, False, True), "ɨ": (False, False, False),
        "ʉ": (False, False, True), "ɯ": (False, True, False), "u": (False, True, True),
        "ɪ": (True, False, False), "ʏ": (True, False, True), "ʊ": (False, True, True),
        "e": (True, False, False), "ø": (True, False, True), "ɘ": (False, False, False),
        "ɵ": (False, False, True), "ɤ": (False, True, False), "o": (False, True, True),
        "ə": (False, False, False), "ɛ": (True, False, False), "œ": (True, False, True),
        "ɜ": (False, False, False), "ɞ": (False, False, True), "ʌ": (False, True, False),
        "ɔ": (False, True, True), "æ": (True, False, False), "ɐ": (False, False, False),
        "a": (True, False, False), "ɶ": (True, False, True), "ɑ": (False, True, False),
        "ɒ": (False, True, True), "ɚ": (False, False, False), "ɝ": (False, False, False),
    }
    for ch, (front, back, rnd) in vowels.items():
        table[ch] = ("vowel", (front, back, rnd), None, True)
    return table


FALLBACK = _fallback_table()


def fallback_flags(ipa: str) -> dict[str, bool] | None:
    """Flags for ``ipa`` from the bundled base-letter table, or None if unknown."""
    entry = FALLBACK.get(base_letter(ipa))
    if entry is None:
        return None
    cls, manner, place, voiced = entry
    flags: dict[str, bool] = {"voiced": voiced}
    if cls == "vowel":
        front, back, rnd = manner
        flags.update(
            consonantal=False, sonorant=True, continuant=True, approximant=True,
            nasal="̃" in ipa, front=front, back=back, round=rnd,
            long="ː" in ipa, labial=rnd, coronal=False, dorsal=True,
        )
        return flags
    obstruent = manner in ("stop", "fricative", "click", "implosive")
    flags.update(
        consonantal=manner != "glide",
        sonorant=not obstruent,
        continuant=manner in ("fricative", "liquid", "lateral", "glide", "trill"),
        delayed_release=manner == "fricative",
        approximant=manner in ("liquid", "lateral", "glide"),
        nasal=manner == "nasal",
        lateral=manner == "lateral",
        tap=manner == "tap",
        trill=manner == "trill",
        click=manner == "click",
        implosive=manner == "implosive",
        ejective="ʼ" in ipa,
        labial=place == "labial" or "ʷ" in ipa,
        round="ʷ" in ipa,
        coronal=place == "coronal",
        dorsal=place == "dorsal",
        long="ː" in ipa,
        epilaryngeal=base_letter(ipa) in "ʜʢʡ",
    )
    return flags


def _flags_from_raw(raw: Mapping[str, str]) -> dict[str, bool]:
    flags = {}
    for col, name in _PRIMITIVES.items():
        v = raw.get(col)
        if v == "+":
            flags[name] = True
        elif v == "-":
            flags[name] = False
    return flags


def derive_flags(ipa: str, segment_class: str, raw: Mapping[str, str] | None = None) -> dict[str, bool]:
    """Named boolean flags for one segment.

    ``raw`` holds the PHOIBLE feature columns; when it is None or carries no
    annotation at all the base-letter table is used instead.
    """
    annotated = raw is not None and any(raw.get(c) not in (None, "", "NA") for c in PHOIBLE_FEATURES)
    if annotated:
        flags = _flags_from_raw(raw)
    else:
        flags = fallback_flags(ipa) or {}

    is_c = segment_class == "consonant"
    is_v = segment_class == "vowel"
    flags["consonant"] = is_c
    flags["vowel"] = is_v
    flags["tone"] = segment_class == "tone"

    obstruent = is_c and flags.get("sonorant") is False
    flags["obstruent"] = obstruent
    flags["fricative"] = obstruent and flags.get("continuant") is True
    flags["stop"] = obstruent and flags.get("continuant") is False and flags.get("delayed_release") is not True
    flags["voiced_obstruent"] = obstruent and flags.get("voiced") is True
    flags["voiceless_obstruent"] = obstruent and flags.get("voiced") is False
    flags["pharyngeal"] = is_c and flags.get("epilaryngeal") is True
    flags["uvular"] = is_c and base_letter(ipa) in UVULAR_LETTERS
    flags["nasal_vowel"] = is_v and flags.get("nasal") is True
    flags["oral_vowel"] = is_v and flags.get("nasal") is False
    flags["front_rounded"] = is_v and flags.get("front") is True and flags.get("round") is True
    flags["front_unrounded"] = is_v and flags.get("front") is True and flags.get("round") is not True
    flags["long_vowel"] = is_v and flags.get("long") is True
    return flags


def has_flag(flags: Mapping[str, bool], name: str) -> bool:
    return flags.get(name) is True


def sonority_class(ipa: str, segment_class: str, flags: Mapping[str, bool]) -> str:
    """Five-way sonority class: obstruent < nasal < liquid < glide < vowel."""
    if segment_class == "vowel":
        return "vowel"
    if segment_class != "consonant":
        raise FeatureLookupError(f"segment {ipa!r} has no sonority (class {segment_class})")
    son = flags.get("sonorant")
    if son is None:
        fb = fallback_flags(ipa)
        if fb is None:
            raise FeatureLookupError(f"no sonority features for segment {ipa!r}")
        flags = fb
        son = fb["sonorant"]
    if son is False:
        return "obstruent"
    if flags.get("nasal") is True:
        return "nasal"
    if flags.get("consonantal") is False:
        return "glide"
    return "liquid"


def place_class(ipa: str, flags: Mapping[str, bool]) -> str:
    """Major place, quantised to labial/coronal/dorsal/other.

    Rounding marks secondary labialisation (``kʷ``), so a rounded labial only
    counts as labial when neither coronal nor dorsal is set.
    """
    known = any(flags.get(p) is not None for p in ("labial", "coronal", "dorsal"))
    if not known:
        fb = fallback_flags(ipa)
        if fb is None:
            raise FeatureLookupError(f"no place features for segment {ipa!r}")
        flags = fb
    if flags.get("labial") is True and flags.get("round") is not True:
        return "labial"
    for p in ("coronal", "dorsal", "labial"):
        if flags.get(p) is True:
            return p
    return "other"
