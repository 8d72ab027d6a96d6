#!/usr/bin/env python3
# Copyright 2026 The healthtext Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates everything under fixtures/.

Texts are composed piece by piece and gold offsets are recorded while
composing, so no fixture label depends on the C++ extraction engine. Entity
fixtures draw their surface forms from data/rules/force_entities.json and the
evidence fixture from data/rules/insomnia_evidence.json. A python re scan
checks that the composed gold is exactly what the rule files can see.

Usage: python3 tools/make_fixtures.py  (from the repository root)
"""

import json
import random
import re
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIX = ROOT / "fixtures"
RULES = ROOT / "data" / "rules"


def write_jsonl(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")


def write_json(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")


def compose(parts):
    """parts: str or (type, str). Returns (text, [(type, start, end, text)])."""
    text, spans = "", []
    for p in parts:
        if isinstance(p, tuple):
            kind, surface = p
            spans.append((kind, len(text), len(text) + len(surface), surface))
            text += surface
        else:
            text += p
    return text, spans


def join_sentences(sentences):
    """Joins sentence strings with one space; returns text and [(start, end)]."""
    text, offsets = "", []
    for s in sentences:
        if text:
            text += " "
        offsets.append((len(text), len(text) + len(s)))
        text += s
    return text, offsets


# ---------------------------------------------------------------------------
# Rule-file view used for the self-consistency check.

def load_patterns(path):
    rules = json.loads(path.read_text(encoding="utf-8"))
    out = []
    for p in rules["patterns"]:
        flags = re.IGNORECASE if p.get("case_insensitive", True) else 0
        src = re.escape(p["pattern"]) if p.get("kind", "keyword") == "keyword" else p["pattern"]
        out.append((p.get("type", p.get("rule_id")), p.get("kind", "keyword"), re.compile(src, flags)))
    return out


def scan(patterns, text):
    """Set of (type, start, end) hits, keywords kept only on token boundaries."""
    hits = set()
    for kind_key, kind, rx in patterns:
        pos = 0
        while pos <= len(text):
            m = rx.search(text, pos)
            if not m:
                break
            s, e = m.span()
            if e == s:
                pos = s + 1
                continue
            if kind == "keyword":
                left = s == 0 or not text[s - 1].isalnum() or not text[s].isalnum()
                right = e == len(text) or not text[e].isalnum() or not text[e - 1].isalnum()
                if not (left and right):
                    pos = s + 1
                    continue
            hits.add((kind_key, s, e))
            pos = e
    return hits


def keyword_values(path, kind_key):
    rules = json.loads(path.read_text(encoding="utf-8"))
    return [p["pattern"] for p in rules["patterns"]
            if p.get("type", p.get("rule_id")) == kind_key and p.get("kind", "keyword") == "keyword"]


# ---------------------------------------------------------------------------
# FORCE-style entity fixture (50 sentences) and the adversarial fixture.

def entity_fixture(rng):
    ent_rules = RULES / "force_entities.json"
    orgs = keyword_values(ent_rules, "Org")
    prdts = keyword_values(ent_rules, "Prdt")
    caus = keyword_values(ent_rules, "Cau")
    locs = keyword_values(ent_rules, "Loc")
    dis = ["Listeria", "Salmonella", "E.coli"]
    units = ["people", "illnesses", "cases", "hospitalizations"]

    def num():
        return ("NumAffected", f"{rng.randint(2, 140)} {rng.choice(units)}")

    def o():
        return ("Org", rng.choice(orgs))

    def p():
        return ("Prdt", rng.choice(prdts))

    def c():
        return ("Cau", rng.choice(caus))

    def d():
        return ("Dis", rng.choice(dis))

    def loc():
        return ("Loc", rng.choice(locs))

    templates = [
        ("Recall", lambda: [o(), " is withdrawing ", p(), " because of ", c(), "."]),
        ("Outbreak", lambda: ["Health officials linked ", d(), " to ", p(), " sold in ", loc(), "."]),
        ("Outbreak", lambda: ["Investigators counted ", num(), " in ", loc(), " tied to ", d(), "."]),
        ("Recall", lambda: ["Regulators at the ", o(), " warned shoppers about ", p(), " made with ", c(), "."]),
        ("Recall", lambda: ["Shoppers in ", loc(), " should discard ", p(), " from ", o(), "."]),
        ("Outbreak", lambda: ["Tests confirmed ", d(), " in samples of ", p(), "."]),
        ("Outbreak", lambda: ["According to the ", o(), ", ", num(), " were reported across ", loc(), "."]),
        ("Neither", lambda: ["Routine inspection found ", c(), " at a plant in ", loc(), "."]),
        ("Neither", lambda: ["Stores restocked their shelves on Monday morning."]),
    ]
    patterns = load_patterns(ent_rules)
    docs = []
    for d_i in range(10):
        sentences, labels, entities = [], {}, []
        for s_i in range(5):
            label, make = templates[(d_i * 5 + s_i) % len(templates)]
            text, spans = compose(make())
            expected = {(t, s, e) for t, s, e, _ in spans}
            assert scan(patterns, text) == expected, (text, scan(patterns, text), expected)
            sentences.append(text)
            labels[str(s_i)] = label
            for t, s, e, surface in spans:
                entities.append({"sentence": s_i, "type": t, "start": s, "end": e, "text": surface})
        text, offsets = join_sentences(sentences)
        docs.append({
            "id": f"force-{d_i:02d}",
            "text": text,
            "source": "news_article",
            "split": "test",
            "sentences": [{"start": s, "end": e} for s, e in offsets],
            "annotations": {"sentence_labels": labels, "entities": entities},
        })
    write_jsonl(FIX / "force_entities.jsonl", docs)

    # Paraphrased and implicit mentions the dictionaries cannot see.
    adversarial = [
        ["Regulators said ", ("Prdt", "the item"), " may contain ", ("Cau", "an unlisted allergen"), "."],
        [("NumAffected", "Those impacted"), " live mostly in ", ("Loc", "the northern counties"), "."],
        [("Org", "The company"), " asked customers to return ", ("Prdt", "the product"), "."],
        [("NumAffected", "Several dozen residents"), " fell ill with ", ("Dis", "the bacteria"), "."],
        [("Org", "Sunrise Farms"), " shipped ", ("Prdt", "the affected lots"), " to ", ("Loc", "Texas"), "."],
        ["A local grocer found ", ("Cau", "plastic pieces"), " in ", ("Prdt", "frozen spinach"), "."],
        ["Lab work identified ", ("Dis", "a rare listeria strain"), " in ", ("Prdt", "the samples"), "."],
        ["Officials in ", ("Loc", "the region"), " said ", ("NumAffected", "nine residents"), " sought care."],
        [("Org", "The distributor"), " blamed ", ("Cau", "a refrigeration failure"), "."],
        ["Buyers of ", ("Prdt", "ice cream"), " from ", ("Org", "Blue Ridge Creamery"), " were told to check lot codes."],
    ]
    docs = []
    for d_i in range(2):
        sentences, entities = [], []
        for s_i in range(5):
            text, spans = compose(adversarial[d_i * 5 + s_i])
            sentences.append(text)
            for t, s, e, surface in spans:
                entities.append({"sentence": s_i, "type": t, "start": s, "end": e, "text": surface})
        text, offsets = join_sentences(sentences)
        docs.append({
            "id": f"adversarial-{d_i:02d}",
            "text": text,
            "source": "news_article",
            "split": "test",
            "sentences": [{"start": s, "end": e} for s, e in offsets],
            "annotations": {"entities": entities},
        })
    write_jsonl(FIX / "force_adversarial.jsonl", docs)

    text = "Listeria was detected in cheese."
    write_jsonl(FIX / "listeria_sentence.jsonl", [{
        "id": "listeria-0", "text": text, "source": "news_article", "split": "test",
        "sentences": [{"start": 0, "end": len(text)}],
        "annotations": {"entities": [{"sentence": 0, "type": "Dis", "start": 0, "end": 8,
                                      "text": "Listeria"}]},
    }])


# ---------------------------------------------------------------------------
# Sentence classification corpus (Recall / Outbreak / Neither).

BRANDS = ["Northwind Provisions", "Cedar Lane Kitchens", "Riverbend Dairy", "Pinecrest Snacks",
          "Lakeshore Bakery", "Summit Meats", "Orchard Hill Produce", "Bayside Fisheries"]
PRODUCTS = ["frozen spinach", "ice cream", "peanut butter", "ground beef", "romaine lettuce",
            "smoked salmon", "granola bars", "soft cheese", "chicken salad", "cookie dough"]
PLACES = ["California", "Texas", "Ohio", "Oregon", "Florida", "Ontario", "Georgia", "Michigan"]
PATHOGENS = ["Listeria", "Salmonella", "E.coli", "norovirus", "hepatitis A"]
HAZARDS = ["undeclared milk", "undeclared peanuts", "metal fragments", "improper pasteurization",
           "undeclared soy", "plastic pieces"]

RECALL_T = [
    "{brand} is voluntarily recalling {n} cases of {product} due to {hazard}.",
    "The recall covers {product} with best by dates through {month}.",
    "Consumers should return the recalled {product} to the place of purchase for a full refund.",
    "{brand} initiated the recall after a customer complaint about {hazard}.",
    "The recalled {product} was distributed to retail stores in {place}.",
    "No other {brand} products are affected by this recall.",
]
OUTBREAK_T = [
    "Health officials are investigating an outbreak of {pathogen} illnesses linked to {product}.",
    "At least {n} people in {place} have been sickened in the outbreak.",
    "Epidemiologic evidence shows that {product} is the likely source of the {pathogen} outbreak.",
    "The outbreak strain of {pathogen} was found in samples collected from ill people.",
    "{n} hospitalizations have been reported and the outbreak investigation is ongoing.",
    "Sick people reported eating {product} in the week before they became ill.",
]
NEITHER_T = [
    "{brand} is a family owned company based in {place}.",
    "The company opened a new distribution center last {month}.",
    "{brand} sells {product} through grocery chains across the region.",
    "For more information, customers may contact the company on weekdays.",
    "The firm employs about {n} workers at its main facility.",
    "Seasonal flavors will be available in stores this {month}.",
]
MONTHS = ["January", "March", "May", "July", "September", "November"]


def fill(rng, template):
    return template.format(brand=rng.choice(BRANDS), product=rng.choice(PRODUCTS),
                           place=rng.choice(PLACES), pathogen=rng.choice(PATHOGENS),
                           hazard=rng.choice(HAZARDS), month=rng.choice(MONTHS),
                           n=rng.randint(2, 400))


def sentence_corpus(rng, n_docs, path, splits, neither_share):
    docs = []
    for d_i in range(n_docs):
        focus = ("Recall", RECALL_T) if d_i % 2 == 0 else ("Outbreak", OUTBREAK_T)
        sentences, labels = [], {}
        for s_i in range(4):
            if rng.random() < neither_share:
                label, pool = "Neither", NEITHER_T
            else:
                label, pool = focus
            s = fill(rng, rng.choice(pool))
            sentences.append(s[0].upper() + s[1:])
            labels[str(s_i)] = label
        text, offsets = join_sentences(sentences)
        docs.append({
            "id": f"press-{d_i:03d}",
            "text": text,
            "source": "press_release",
            "split": splits(d_i),
            "sentences": [{"start": s, "end": e} for s, e in offsets],
            "annotations": {"sentence_labels": labels},
        })
    write_jsonl(path, docs)
    return docs


def toy_text_corpus():
    # Vocabulary per class is disjoint, so a linear model separates it exactly.
    rows = [
        ("Recall", "Acme is recalling bagels."), ("Recall", "Brand recalling crackers today."),
        ("Recall", "Grocer recalling yogurt cups."), ("Recall", "Bakery recalling muffins."),
        ("Outbreak", "Outbreak sickens hikers."), ("Outbreak", "County outbreak grows."),
        ("Outbreak", "Outbreak hits campers."), ("Outbreak", "Dormitory outbreak spreads."),
        ("Neither", "Farm opens market stall."), ("Neither", "Chef shares soup tips."),
        ("Neither", "Store extends weekend hours."), ("Neither", "Festival features local cheese."),
    ]
    docs = []
    for i, (label, text) in enumerate(rows):
        docs.append({"id": f"toy-{i:02d}", "text": text, "source": "news_article", "split": "train",
                     "sentences": [{"start": 0, "end": len(text)}],
                     "annotations": {"sentence_labels": {"0": label}}})
    write_jsonl(FIX / "toy_text.jsonl", docs)


def toy_separable(rng):
    rows = []
    for i in range(20):
        label = i % 2
        x1 = rng.uniform(0.5, 2.0) * (1 if label else -1)
        x2 = rng.uniform(-1.0, 1.0)
        rows.append({"x": [round(x1, 6), round(x2, 6)], "label": label})
    write_jsonl(FIX / "toy_separable.jsonl", rows)


# ---------------------------------------------------------------------------
# Clinical-note fixture with insomnia labels, rule tags and evidence spans.

NEUTRAL = [
    "Patient presents for follow-up of hypertension.",
    "Blood pressure is well controlled on lisinopril.",
    "Lungs are clear to auscultation bilaterally.",
    "Denies chest pain or shortness of breath.",
    "Diet and exercise were reviewed with the patient.",
    "Labs from last visit were within normal limits.",
    "Knee pain has improved with physical therapy.",
    "Plan to recheck lipid panel in six months.",
    "Vaccinations are up to date.",
    "Patient is tolerating metformin without side effects.",
]
EVIDENCE = {
    0: ["Patient reports difficulty falling asleep most nights.",
        "She describes trouble sleeping since starting the new job.",
        "He notes early morning awakening and cannot return to sleep."],
    1: ["Reports daytime fatigue that interferes with work.",
        "Endorses poor concentration during afternoon meetings.",
        "Complains of daytime sleepiness while driving."],
    2: ["Started zolpidem 5 mg at bedtime.",
        "Continues trazodone 50 mg nightly with partial benefit.",
        "Was previously prescribed temazepam by another provider."],
    3: ["Assessment includes chronic insomnia.",
        "History of sleep disturbance was discussed."],
    4: ["Describes 3 months of poor sleep after the move.",
        "Reports 6 weeks of poor sleep following surgery."],
}
# Evidence with no dictionary surface form; gold keeps it, rules miss it.
IMPLICIT = {
    0: "She lies awake for hours before dozing off.",
    1: "Feels exhausted and foggy through most afternoons.",
}


def notes_fixture(rng):
    patterns = load_patterns(RULES / "insomnia_evidence.json")
    docs = []
    for d_i in range(48):
        positive = d_i % 3 != 2
        chosen = sorted(rng.sample(range(5), rng.randint(1, 3))) if positive else []
        pieces = [(None, s) for s in rng.sample(NEUTRAL, 3)]
        for r in chosen:
            pieces.append((r, rng.choice(EVIDENCE[r])))
        if positive and d_i % 7 == 0:
            r = rng.choice(sorted(IMPLICIT))
            pieces.append((r, IMPLICIT[r]))
            if r not in chosen:
                chosen = sorted(chosen + [r])
        rng.shuffle(pieces)
        text, offsets = join_sentences([s for _, s in pieces])
        spans = []
        for (r, s), (start, end) in zip(pieces, offsets):
            found = {h[0] for h in scan(patterns, s)}
            if r is None:
                assert not found, s
                continue
            assert found in ({r}, set()), (s, found)
            spans.append({"rule_id": r, "start": start, "end": end, "text": s})
        spans.sort(key=lambda x: (x["start"], x["rule_id"]))
        split = "train" if d_i < 30 else ("dev" if d_i < 39 else "test")
        docs.append({
            "id": f"note-{d_i:03d}",
            "text": text,
            "source": "clinical_note",
            "split": split,
            "sentences": [{"start": s, "end": e} for s, e in offsets],
            "annotations": {"insomnia": positive,
                            "rule_tags": [r in chosen for r in range(5)],
                            "evidence_spans": spans},
        })
    write_jsonl(FIX / "task4_notes.jsonl", docs)


# ---------------------------------------------------------------------------
# Stub generation responses.

LABELING_SENTENCES = [
    [
        "{brand} has refreshed the nutrition facts panel on its {product} line.",
        "The new panel lists added sugars on a separate row so shoppers can compare brands quickly.",
        "Serving sizes now reflect the amount people typically eat in one sitting.",
        "Calories appear in a larger bold font near the top of the panel.",
        "Vitamin D and potassium values are shown in both micrograms and percent daily value.",
        "The company consulted registered dietitians while redesigning the layout.",
        "Older packages will remain on shelves until existing stock sells through.",
        "Retail partners received printed guides that explain each updated field.",
        "A short video on the company website walks through the changes line by line.",
        "Customer surveys showed that most readers wanted simpler wording.",
        "Sodium figures were rounded using the current federal rounding rules.",
        "The refreshed panel also notes whether each item is a good source of fiber.",
        "Staff at the plant completed training on the new printing templates.",
        "The update applies to every flavor and package size sold nationwide.",
        "Questions about the redesign can be sent to the consumer care team by email.",
        "Feedback gathered this year will shape the next annual labeling review.",
        "Dietitians at partner clinics will hand out printed copies of the new panel to interested patients.",
        "The company expects the remaining regional warehouses to switch over before the end of the quarter.",
    ],
    [
        "Starting this season, {brand} will print a bolded allergen statement on every {product} carton.",
        "The statement appears directly below the ingredient list in a contrasting color.",
        "Tree nuts, sesame, wheat, and soy are each named individually rather than grouped.",
        "A new shared equipment notice tells families which facility lines also handle nuts.",
        "Parents of children with food sensitivities helped test early drafts of the wording.",
        "Icons next to the text give a quick visual cue for shoppers in a hurry.",
        "Store associates can scan a shelf tag to open a full allergen sheet on their phones.",
        "Sesame was added to the statement after the latest federal labeling guidance.",
        "The company audited its supplier declarations before finalizing the design.",
        "Each production run is now checked against a digital allergen matrix.",
        "Packaging printed before the change will be phased out over several months.",
        "A toll free line staffed by nutrition specialists answers allergen questions.",
        "School cafeterias that buy in bulk will receive the same labels on larger cases.",
        "Translations in Spanish and French are included on the side panel.",
        "Independent auditors will review the allergen program twice each year.",
        "The company plans to publish a summary of audit findings on its website.",
        "Allergy advocacy groups praised the clearer wording during a recent community webinar.",
        "Families can request free sample labels to practice reading them with younger children.",
    ],
    [
        "{brand} now publishes a complete sourcing page for each ingredient in its {product}.",
        "A printed code on the lid links to farms, mills, and co packers for that batch.",
        "Flavorings and colors are described by their plain names instead of trade terms.",
        "The recipe for the classic variety was simplified to eleven ingredients.",
        "Cane sugar replaced corn syrup in two of the most popular flavors.",
        "Organic certifications are displayed with the certifier name and license number.",
        "Growers who supply oats and berries are profiled in short online stories.",
        "The transparency effort grew out of conversations at community tasting events.",
        "Nutrition students from a nearby university reviewed the ingredient glossary.",
        "Percentages of key ingredients are now stated on the front of the box.",
        "The company committed to explaining any future recipe change at least a month ahead.",
        "Bulk buyers can download specification sheets from a partner portal.",
        "Shoppers reported that the new glossary answered most of their questions.",
        "Carbon footprint estimates for each product will be added next spring.",
        "Local food banks will receive surplus cartons printed with the older design.",
        "Comments about the sourcing page are read by the quality team every week.",
        "Visitors to the flagship bakery can tour the ingredient room on the first Saturday of each month.",
        "A quarterly newsletter will highlight new growers and explain how each partnership began.",
    ],
]


def labeling_text(idx, brand, product):
    return " ".join(s.format(brand=brand, product=product) for s in LABELING_SENTENCES[idx])


def shingles(text, n=5):
    toks = re.findall(r"\w+(?:['\-.]\w+)*", text.lower())
    return {tuple(toks[i:i + n]) for i in range(len(toks) - n + 1)}


def jaccard(a, b):
    sa, sb = shingles(a), shingles(b)
    return len(sa & sb) / len(sa | sb) if sa | sb else 1.0


def word_count(text):
    return len(text.split())


def stub_fixtures(press_docs):
    novel = [labeling_text(0, "Brightfield Pantry", "oat cereal"),
             labeling_text(1, "Meadowbrook Foods", "frozen waffles"),
             labeling_text(2, "Hollow Creek Organics", "granola")]
    for t in novel:
        assert 200 <= word_count(t) <= 350, word_count(t)
        assert not re.search(r"\b(recall|outbreak)\b", t, re.IGNORECASE)
    for i in range(3):
        for j in range(i + 1, 3):
            assert jaccard(novel[i], novel[j]) < 0.1
    for d in press_docs:
        for t in novel:
            assert jaccard(t, d["text"]) < 0.1

    write_json(FIX / "stub" / "novel3.json",
               {"cycle": False, "responses": [{"status": 200, "content": t} for t in novel]})
    write_json(FIX / "stub" / "duplicates.json",
               {"cycle": True, "responses": [{"status": 200, "content": press_docs[0]["text"]}]})

    forbidden = novel[1].replace("Starting this season,", "Following last month's recall,", 1)
    hyphenated = labeling_text(2, "Hollow Creek Organics", "granola").replace(
        "community tasting events", "post-outbreak community listening sessions", 1)
    short = " ".join(LABELING_SENTENCES[0][:4]).format(brand="Tiny Co", product="crackers")
    assert word_count(short) < 200
    mixed = [
        {"status": 200, "content": novel[0]},                       # accepted
        {"status": 200, "content": novel[0]},                       # duplicate of accepted
        {"status": 200, "content": forbidden},                      # forbidden keyword
        {"status": 200, "content": short},                          # length
        {"status": 200, "raw": "{\"choices\": [ not json"},         # parse_error
        {"status": 200, "content": novel[1]},                       # accepted
        {"status": 200, "content": hyphenated},                     # forbidden (hyphen part)
        {"status": 200, "content": press_docs[1]["text"]},          # duplicate of corpus
    ]
    write_json(FIX / "stub" / "mixed.json", {"cycle": False, "responses": mixed})
    write_json(FIX / "stub" / "retry.json", {"cycle": False, "responses": [
        {"status": 500, "content": ""}, {"status": 500, "content": ""},
        {"status": 200, "content": novel[2]}]})
    write_json(FIX / "stub" / "unavailable.json",
               {"cycle": True, "responses": [{"status": 503, "content": ""}]})


def main():
    rng = random.Random(20240601)
    entity_fixture(rng)
    press = sentence_corpus(
        rng, 60, FIX / "task5_sentences.jsonl",
        lambda i: "train" if i < 36 else ("dev" if i < 48 else "test"), neither_share=0.45)
    toy_text_corpus()
    toy_separable(rng)
    notes_fixture(rng)
    stub_fixtures(press)


if __name__ == "__main__":
    main()
