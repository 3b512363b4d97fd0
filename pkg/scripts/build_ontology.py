"""Regenerate src/typolex/data/ontology.json from the two core-vocabulary lists.

The tree is root -> domain -> category -> concept. Concepts present on both
lists are stored once with both source tags.

    python scripts/build_ontology.py
"""

import json
from pathlib import Path

# Swadesh 207-item list, in list order (short glosses).
SWADESH_207 = """
I you he we you_pl they this that here there who what where when how not all
many some few other one two three four five big long wide thick heavy small
short narrow thin woman man person child wife husband mother father animal fish
bird dog louse snake worm tree forest stick fruit seed leaf root bark flower
grass rope skin meat blood bone fat egg horn tail feather hair head ear eye nose
mouth tooth tongue fingernail foot leg knee hand wing belly guts neck back
breast heart liver drink eat bite suck spit vomit blow breathe laugh see hear
know think smell fear sleep live die kill fight hunt hit cut split stab scratch
dig swim fly walk come lie sit stand turn fall give hold squeeze rub wash wipe
pull push throw tie sew count say sing play float flow freeze swell sun moon
star water rain river lake sea salt stone sand dust earth cloud fog sky wind
snow ice smoke fire ash burn road mountain red green yellow white black night
day year warm cold full new old good bad rotten dirty straight round sharp dull
smooth wet dry correct near far right left at in with and if because name
""".split()

# Leipzig-Jakarta list, mapped onto the gloss vocabulary above where the
# concepts coincide (e.g. "flesh/meat" -> meat, "soil" -> earth).
LEIPZIG_JAKARTA = """
fire nose go water mouth tongue blood bone you root come breast rain I name
louse wing meat hand fly_insect night ear neck far make house stone bitter say
tooth hair big one who he hit leg horn this fish yesterday drink black navel
stand bite back wind smoke what child egg give new burn not good know knee sand
laugh hear earth leaf red liver hide skin suck carry ant heavy take old eat
thigh thick long blow wood run fall eye ash tail dog cry tie see sweet rope
shade bird salt small wide star in hard grind
""".split()

CATEGORIES = {
    "entity": {
        "person": "woman man person child wife husband mother father",
        "animal": "animal fish bird dog louse snake worm fly_insect ant",
        "plant": "tree forest stick fruit seed leaf root bark flower grass wood",
        "body_part": (
            "skin meat blood bone fat egg horn tail feather hair head ear eye nose mouth tooth tongue "
            "fingernail foot leg knee hand wing belly guts neck back breast heart liver navel thigh"
        ),
        "landscape": "water river lake sea salt stone sand dust earth road mountain",
        "sky_weather": "sun moon star rain cloud fog sky wind snow ice smoke fire ash shade",
        "artifact": "rope house name",
        "time": "night day year yesterday",
    },
    "event": {
        "motion": "swim fly walk come go run fall turn float flow",
        "posture": "lie sit stand",
        "bodily": "drink eat bite suck spit vomit blow breathe laugh cry sleep live die swell",
        "cognition": "see hear know think smell fear",
        "physical_action": (
            "kill fight hunt hit cut split stab scratch dig give hold squeeze rub wash wipe pull push "
            "throw tie sew make hide carry take grind burn freeze"
        ),
        "communication": "count say sing play",
    },
    "property": {
        "dimension": "big long wide thick heavy small short narrow thin",
        "color": "red green yellow white black",
        "quality": (
            "warm cold full new old good bad rotten dirty straight round sharp dull smooth wet dry "
            "correct bitter sweet hard"
        ),
    },
    "grammar": {
        "pronoun": "I you he we you_pl they",
        "deixis": "this that here there who what where when how",
        "quantifier": "not all many some few other one two three four five",
        "relation": "near far right left at in with and if because",
    },
}


def build() -> dict:
    swadesh, lj = set(SWADESH_207), set(LEIPZIG_JAKARTA)
    assert len(SWADESH_207) == 207 and len(swadesh) == 207, len(SWADESH_207)
    assert len(LEIPZIG_JAKARTA) == 100 and len(lj) == 100, len(LEIPZIG_JAKARTA)
    nodes = {"root": {"gloss": "concept", "parent": None, "children": []}}
    placed = {}
    for domain, cats in CATEGORIES.items():
        nodes[domain] = {"gloss": domain, "parent": "root", "children": []}
        nodes["root"]["children"].append(domain)
        for cat, words in cats.items():
            nodes[cat] = {"gloss": cat.replace("_", " "), "parent": domain, "children": []}
            nodes[domain]["children"].append(cat)
            for w in words.split():
                if w in placed:
                    raise ValueError(f"{w} placed under both {placed[w]} and {cat}")
                placed[w] = cat
                cid = f"{cat}.{w}"
                sources = [s for s, members in (("swadesh207", swadesh), ("leipzig_jakarta", lj)) if w in members]
                nodes[cid] = {"gloss": w.replace("_", " "), "parent": cat, "children": [], "sources": sources}
                nodes[cat]["children"].append(cid)
    missing = (swadesh | lj) - set(placed)
    extra = set(placed) - (swadesh | lj)
    if missing or extra:
        raise ValueError(f"unplaced {sorted(missing)}; unknown {sorted(extra)}")
    return {"root": "root", "nodes": nodes}


if __name__ == "__main__":
    out = Path(__file__).resolve().parents[1] / "src" / "typolex" / "data" / "ontology.json"
    data = build()
    out.write_text(json.dumps(data, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")
    leaves = sum(1 for n in data["nodes"].values() if not n["children"])
    print(f"wrote {out} ({leaves} concepts)")
