"""Generate cfq.jsonl: 200 synthetic questions with CFQ-style SPARQL.

Deterministic; rerun with `python3 gen_cfq.py > cfq.jsonl`.
The first 160 records are the train part, the last 40 the dev part.
"""

import json
import random

FILM_OF = [
    ("ns:film.film.directed_by", "directed"),
    ("ns:film.film.edited_by", "edited"),
    ("ns:film.film.written_by", "wrote"),
    ("ns:film.film.produced_by|ns:film.film.executive_produced_by", "produced"),
    ("ns:film.film.cinematography", "was cinematographer of"),
    ("ns:film.film.distributors/ns:film.film_film_distributor_relationship.distributor", "distributed"),
]
PERSON_OF = [
    ("ns:film.actor.film/ns:film.performance.film", "starred in"),
    ("ns:film.director.film", "directed"),
    ("ns:film.producer.film|ns:film.production_company.films", "produced"),
    ("ns:film.editor.film", "edited"),
]
PEOPLE = [
    ("ns:people.person.spouse_s/ns:people.marriage.spouse|ns:fictional_universe.fictional_character.married_to/ns:fictional_universe.marriage_of_fictional_characters.spouses", "married"),
    ("ns:people.person.sibling_s/ns:people.sibling_relationship.sibling|ns:fictional_universe.fictional_character.siblings/ns:fictional_universe.sibling_relationship_of_fictional_characters.siblings", "was a sibling of"),
    ("ns:people.person.parents|ns:fictional_universe.fictional_character.parents|ns:organization.organization.parent/ns:organization.organization_relationship.parent", "was a child of"),
    ("ns:influence.influence_node.influenced_by", "was influenced by"),
    ("ns:people.person.employment_history/ns:business.employment_tenure.company", "was employed by"),
    ("ns:people.person.nationality", "was a national of"),
]
ORG = [
    ("ns:organization.organization.founders", "founded"),
    ("ns:organization.organization.acquired_by/ns:business.acquisition.acquiring_company", "acquired"),
]
FILM_LINKS = [
    ("ns:film.film.prequel", "a prequel of"),
    ("ns:film.film.sequel", "a sequel of"),
]
TYPES = {
    "film": "ns:film.film",
    "actor": "ns:film.actor",
    "director": "ns:film.director",
    "person": "ns:people.person",
    "company": "ns:film.production_company",
    "editor": "ns:film.editor",
}
GENDERS = {"male": "ns:m.05zppz", "female": "ns:m.02zsn"}


def join_words(items):
    if len(items) == 1:
        return items[0]
    return ", ".join(items[:-1]) + " and " + items[-1]


class Gen:
    def __init__(self, rng):
        self.rng = rng

    def entities(self, k, avoid=()):
        pool = [f"M{i}" for i in range(6) if f"M{i}" not in avoid]
        return sorted(self.rng.sample(pool, k))

    def query(self):
        rng = self.rng
        conjuncts = []
        words = []
        lead = None
        count = rng.random() < 0.45
        subj = "M0" if count else "?x0"
        families = [FILM_OF, PERSON_OF, PEOPLE, ORG]
        family = rng.choice(families)
        n_rel = rng.choice([1, 2, 2, 3])
        rels = rng.sample(family, min(n_rel, len(family)))
        shared = rng.random() < 0.7
        objs = self.entities(rng.choice([1, 2, 2, 3]), avoid=[subj])
        for rel, phrase in rels:
            these = objs if shared else self.entities(rng.choice([1, 2]), avoid=[subj])
            for o in these:
                conjuncts.append(f"{subj} {rel} {o}")
            words.append(f"{phrase} {join_words(these)}")
        if family is PEOPLE and not count and rng.random() < 0.5:
            conjuncts.append(f"FILTER ( ?x0 != {objs[0]} )")
        if not count and rng.random() < 0.6:
            kind = rng.choice(sorted(TYPES))
            conjuncts.append(f"?x0 a {TYPES[kind]}")
            lead = f"Which {kind}"
        if rng.random() < 0.4:
            # a second variable linked to the first
            rel, phrase = rng.choice(FILM_LINKS + PEOPLE[:2])
            conjuncts.append(f"{subj} {rel} ?x1")
            conjuncts.append(f"?x1 a {TYPES[rng.choice(['film', 'person'])]}")
            if rng.random() < 0.5:
                g = rng.choice(sorted(GENDERS))
                conjuncts.append(f"?x1 ns:people.person.gender {GENDERS[g]}")
                words.append(f"{phrase} a {g} entity")
            else:
                rel2, phrase2 = rng.choice(FILM_OF)
                e = self.entities(1, avoid=[subj])[0]
                conjuncts.append(f"?x1 {rel2} {e}")
                words.append(f"{phrase} something {e} {phrase2}")
            if rng.random() < 0.3:
                conjuncts.append(f"FILTER ( ?x1 != {subj} )")
        if rng.random() < 0.05:
            conjuncts.append(conjuncts[0])
        head = "SELECT count(*) WHERE {" if count else "SELECT DISTINCT ?x0 WHERE {"
        rng.shuffle(conjuncts)
        if rng.random() < 0.5:
            body = "\n".join(c + " ." for c in conjuncts[:-1]) + "\n" + conjuncts[-1]
            y = f"{head}\n{body}\n}}"
        else:
            y = f"{head} " + " . ".join(conjuncts) + " }"
        lead = lead or ("Did M0" if count else "Who")
        x = f"{lead} {join_words(words)}"
        return x, y


def main():
    gen = Gen(random.Random(20211))
    for i in range(200):
        x, y = gen.query()
        print(json.dumps({"id": f"cfq-{i:03d}", "x": x, "y": y}))


if __name__ == "__main__":
    main()
